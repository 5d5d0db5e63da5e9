"""CFL timestep, wet-dry timestep reduction and the forward-Euler state update."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .grid import G_DEFAULT, H_EPS, FieldSet
from .riemann import EdgeFluxAccumulator

# depths in (-NEG_TOL, 0) after an update are rounding noise and snap to zero
NEG_TOL = 1e-14
MAX_REDUCTIONS = 10


class NoWetCellsError(ValueError):
    pass


class NegativeDepthError(ArithmeticError):
    """The update drove a depth below ``-NEG_TOL``; the step needs a smaller dt."""

    def __init__(self, message, cell=None, depth=None):
        super().__init__(message)
        self.cell = cell
        self.depth = depth


class ReductionLimitError(ArithmeticError):
    pass


@dataclass
class StepControl:
    dt: float = 0.0
    cfl: float = 0.45
    t_now: float = 0.0
    reductions_applied: int = 0


@njit(cache=True, nogil=True)
def _min_cell_dt(h, hu, hv, nx, ny, dx, g):
    s = nx + 2
    best = np.inf
    for j in range(1, ny + 1):
        for i in range(1, nx + 1):
            k = j * s + i
            hk = h[k]
            if hk > H_EPS:
                c = np.sqrt(g * hk)
                speed = max(abs(hu[k] / hk) + c, abs(hv[k] / hk) + c)
                cell_dt = dx / speed
                if cell_dt < best:
                    best = cell_dt
    return best


def compute_dt(fields: FieldSet, cfl: float = 0.45, g: float = G_DEFAULT) -> float:
    """``cfl * min(dx / max(|u| + c, |v| + c))`` over wet interior cells.

    Returns ``inf`` for a subdomain without wet cells so that a global minimum
    over ranks ignores it; callers treat a global ``inf`` as an error.
    """
    spec = fields.spec
    return cfl * _min_cell_dt(fields.h, fields.hu, fields.hv, spec.n_x, spec.n_y, spec.dx, g)


def compute_dt_checked(fields: FieldSet, cfl: float = 0.45, g: float = G_DEFAULT) -> float:
    dt = compute_dt(fields, cfl, g)
    if not np.isfinite(dt):
        raise NoWetCellsError("no wet cells")
    return dt


@njit(cache=True, nogil=True)
def _reduction_level(h, ax, ay, nx, ny, dt, dx, rain, max_red):
    """Halvings of dt needed so no interior depth falls below -NEG_TOL; also the worst cell."""
    s = nx + 2
    r = dt / dx
    rd = rain * dt
    worst_level = 0
    worst_cell = -1
    for j in range(1, ny + 1):
        for i in range(1, nx + 1):
            k = j * s + i
            dh = ax[k] + ay[k]
            hn = h[k] - r * dh + rd
            if hn < -NEG_TOL:
                level = 0
                scale = 1.0
                while hn < -NEG_TOL and level <= max_red:
                    level += 1
                    scale *= 0.5
                    hn = h[k] - (scale * r) * dh + scale * rd
                if level > worst_level:
                    worst_level = level
                    worst_cell = k
    return worst_level, worst_cell


def reduction_level(fields: FieldSet, acc_x: EdgeFluxAccumulator, acc_y: EdgeFluxAccumulator,
                    dt: float, rain_rate: float = 0.0, max_reductions: int = MAX_REDUCTIONS) -> tuple[int, int]:
    spec = fields.spec
    return _reduction_level(fields.h, acc_x.dh, acc_y.dh, spec.n_x, spec.n_y, dt, spec.dx,
                            rain_rate, max_reductions)


def compute_timestep_reduction(fields: FieldSet, acc_x: EdgeFluxAccumulator, acc_y: EdgeFluxAccumulator,
                               dt: float, rain_rate: float = 0.0,
                               max_reductions: int = MAX_REDUCTIONS) -> float:
    """Largest ``dt / 2**k`` (``k <= max_reductions``) keeping every depth above ``-NEG_TOL``."""
    level, cell = reduction_level(fields, acc_x, acc_y, dt, rain_rate, max_reductions)
    if level > max_reductions:
        spec = fields.spec
        i, j = cell % spec.stride, cell // spec.stride
        raise ReductionLimitError(
            f"depth stays negative after {max_reductions} halvings of dt={dt:g}; worst cell ({i}, {j})")
    return dt * 0.5**level


@njit(cache=True, nogil=True)
def _new_state(h, hu, hv, ax_h, ax_hu, ax_hv, ay_h, ay_hu, ay_hv, nx, ny, dt, dx, rain,
               manning, g, swap_order, out_h, out_hu, out_hv):
    s = nx + 2
    r = dt / dx
    rd = rain * dt
    worst = 0.0
    worst_cell = -1
    friction = manning > 0.0
    gn2dt = g * manning * manning * dt
    for j in range(1, ny + 1):
        for i in range(1, nx + 1):
            k = j * s + i
            if swap_order:
                hn = (h[k] - r * ax_h[k]) - r * ay_h[k] + rd
                hun = (hu[k] - r * ax_hu[k]) - r * ay_hu[k]
                hvn = (hv[k] - r * ax_hv[k]) - r * ay_hv[k]
            else:
                hn = h[k] - r * (ax_h[k] + ay_h[k]) + rd
                hun = hu[k] - r * (ax_hu[k] + ay_hu[k])
                hvn = hv[k] - r * (ax_hv[k] + ay_hv[k])
            if hn < 0.0:
                if hn < worst:
                    worst = hn
                    worst_cell = k
                if hn > -NEG_TOL:
                    hn = 0.0
            if hn <= H_EPS:
                hun = 0.0
                hvn = 0.0
            elif friction:
                speed = np.sqrt(hun * hun + hvn * hvn) / hn
                factor = 1.0 / (1.0 + gn2dt * speed / hn ** (4.0 / 3.0))
                hun = hun * factor
                hvn = hvn * factor
            out_h[k] = hn
            out_hu[k] = hun
            out_hv[k] = hvn
    return worst, worst_cell


def compute_new_state(fields: FieldSet, acc_x: EdgeFluxAccumulator, acc_y: EdgeFluxAccumulator,
                      dt: float, rain_rate: float = 0.0, manning_n: float = 0.0, g: float = G_DEFAULT,
                      out: FieldSet | None = None, *, swap_order: bool = False) -> FieldSet:
    """``U - dt/dx * (acc_x + acc_y)``, then rain, then Manning friction, over interior cells.

    Writes into ``out`` (which may be ``fields`` itself) or a fresh copy.  Cells
    left dry lose their momentum.  ``swap_order`` subtracts the two sweeps one
    at a time instead of summing them first; it is a fault-injection hook.
    Raises :class:`NegativeDepthError` when a depth ends below ``-NEG_TOL``.
    """
    if out is None:
        out = fields.copy()
    spec = fields.spec
    worst, cell = _new_state(fields.h, fields.hu, fields.hv, acc_x.dh, acc_x.dhu, acc_x.dhv,
                             acc_y.dh, acc_y.dhu, acc_y.dhv, spec.n_x, spec.n_y, dt, spec.dx,
                             rain_rate, manning_n, g, swap_order, out.h, out.hu, out.hv)
    if worst < -NEG_TOL:
        i, j = cell % spec.stride, cell // spec.stride
        raise NegativeDepthError(f"needs dt reduction: depth {worst:.3e} at cell ({i}, {j})", (i, j), worst)
    return out
