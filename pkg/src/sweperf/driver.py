"""Simulation loop over a rank grid, run reports and the 1D dam-break convergence study.

Per step, on every rank and in this order: CFL timestep (global min), x
sweep, y sweep, wet-dry timestep reduction (global min), state update,
reflective walls, halo exchange, boundary mass accounting and, at output
times, a snapshot.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import stoker
from .decomposition import (Communicator, Fabric, SubdomainLayout, apply_reflective_bc, decompose,
                            exchange_halos, gather, run_ranks, scatter)
from .grid import FieldSet, GridSpec, ScenarioConfig, make_scenario
from .io import write_snapshot
from .perf import KernelSample, KernelTimer, merge_samples
from .riemann import EdgeFluxAccumulator, accumulate_flux_sweep
from .timestepping import (MAX_REDUCTIONS, NoWetCellsError, ReductionLimitError, compute_dt,
                           compute_new_state, reduction_level)

log = logging.getLogger(__name__)

PHASES = ("computeDt", "fluxX", "fluxY", "dtReduction", "newState",
          "boundaryConditions", "haloExchange", "boundaryAccounting", "snapshot")
# relative volume mismatch tolerated from walls that should pass no mass at all
WALL_LEAK_TOL = 1e-8


class SimulationError(RuntimeError):
    def __init__(self, message, step=None, rank=None):
        super().__init__(message)
        self.step, self.rank = step, rank


@dataclass
class Hooks:
    """Fault injection for the validation suite; the defaults change nothing."""

    beta_sign: float = 1.0
    # odd ranks apply the two sweeps one after the other instead of summing them first
    rank_dependent_order: bool = False


@dataclass
class AuditEntry:
    step: int
    t: float
    volume: float
    rain_volume: float
    boundary_inflow: float


@dataclass
class RunReport:
    steps: int
    t_final: float
    wall_time: float
    samples: list[KernelSample]
    mass_audit: list[AuditEntry]
    snapshots: list[Path]
    fields: FieldSet
    dims: tuple[int, int] = (1, 1)
    trace: list[list[str]] = field(default_factory=list)
    dt_checks: list[tuple[list[float], float]] = field(default_factory=list)
    fabric: dict = field(default_factory=dict)

    @property
    def boundary_inflow(self) -> float:
        return sum(a.boundary_inflow for a in self.mass_audit)

    def summary(self) -> dict:
        return {
            "steps": self.steps,
            "t_final": self.t_final,
            "wall_time_s": self.wall_time,
            "per_kernel": {s.name: s.as_dict() for s in self.samples},
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


@dataclass
class _Context:
    cfg: ScenarioConfig
    spec: GridSpec
    layouts: list[SubdomainLayout]
    tiles: list[FieldSet]
    hooks: Hooks
    trace: bool
    output_dir: Path | None
    audit_every: int
    clock: object = time.perf_counter


@dataclass
class _RankResult:
    tile: FieldSet
    samples: list[KernelSample]
    steps: int
    t: float
    wall: float = 0.0
    audit: list[AuditEntry] = field(default_factory=list)
    trace: list[list[str]] = field(default_factory=list)
    dt_checks: list = field(default_factory=list)
    snapshots: list[Path] = field(default_factory=list)


def _local_sum(f: FieldSet) -> float:
    return float(f.interior("h").sum())


def _snapshot(comm: Communicator, ctx: _Context, f: FieldSet, t: float, index: int) -> Path | None:
    tiles = comm.gather(f.copy(), "snapshot")
    if tiles is None:
        return None
    whole = gather(tiles, ctx.layouts, ctx.spec)
    return write_snapshot(ctx.output_dir / f"snapshot_{index:04d}.swe", whole, t)


def _rank_main(comm: Communicator, ctx: _Context) -> _RankResult:
    cfg, hooks = ctx.cfg, ctx.hooks
    lay = ctx.layouts[comm.rank]
    f = ctx.tiles[comm.rank]
    nx, ny = lay.n_x, lay.n_y
    acc_x = EdgeFluxAccumulator.zeros(f.spec)
    acc_y = EdgeFluxAccumulator.zeros(f.spec)
    timer = KernelTimer(comm, ctx.clock)
    swap = hooks.rank_dependent_order and comm.rank % 2 == 1
    area = ctx.spec.dx**2
    rain_cells = ctx.spec.n_cells * area
    result = _RankResult(f, [], 0, 0.0)

    volume = comm.allreduce_sum(_local_sum(f)) * area
    result.audit.append(AuditEntry(0, 0.0, volume, 0.0, 0.0))
    last_volume, rain_pending = volume, 0.0
    next_io = cfg.t_io if cfg.t_io else math.inf
    io_index = 0
    io_time = 0.0
    t, step = 0.0, 0

    comm.barrier()
    start = ctx.clock()
    while t < cfg.t_end and (cfg.max_steps is None or step < cfg.max_steps):
        step += 1
        phases = []
        try:
            with timer.region("computeDt", nx, ny):
                dt_local = compute_dt(f, cfg.cfl, cfg.g)
            dt = comm.allreduce_min(dt_local)
            if ctx.trace:
                local_dts = comm.gather(dt_local, "dt-check")
                if local_dts is not None:
                    result.dt_checks.append((local_dts, dt))
            if not math.isfinite(dt):
                raise NoWetCellsError("no wet cells")
            dt = min(dt, cfg.t_end - t)
            phases.append("computeDt")

            with timer.region("fluxX", nx, ny):
                accumulate_flux_sweep(f, "x", cfg.g, acc_x, entropy_fix=cfg.entropy_fix, beta_sign=hooks.beta_sign)
            phases.append("fluxX")
            with timer.region("fluxY", nx, ny):
                accumulate_flux_sweep(f, "y", cfg.g, acc_y, entropy_fix=cfg.entropy_fix, beta_sign=hooks.beta_sign)
            phases.append("fluxY")

            with timer.region("dtReduction", nx, ny):
                level, cell = reduction_level(f, acc_x, acc_y, dt, cfg.rain_rate, MAX_REDUCTIONS)
            if level > MAX_REDUCTIONS:
                i, j = cell % f.spec.stride, cell // f.spec.stride
                raise ReductionLimitError(
                    f"depth stays negative after {MAX_REDUCTIONS} halvings; worst local cell ({i}, {j})")
            dt = comm.allreduce_min(dt * 0.5**level)
            phases.append("dtReduction")

            with timer.region("newState", nx, ny):
                compute_new_state(f, acc_x, acc_y, dt, cfg.rain_rate, cfg.manning_n, cfg.g, out=f, swap_order=swap)
            phases.append("newState")
        except (ArithmeticError, ValueError) as exc:
            raise SimulationError(f"step {step}, rank {comm.rank}: {exc}", step, comm.rank) from exc

        apply_reflective_bc(f, lay)
        phases.append("boundaryConditions")
        exchange_halos(f, lay, comm)
        phases.append("haloExchange")

        t += dt
        rain_pending += cfg.rain_rate * dt * rain_cells
        if step % ctx.audit_every == 0:
            volume = comm.allreduce_sum(_local_sum(f)) * area
            inflow = volume - last_volume - rain_pending
            if abs(inflow) > WALL_LEAK_TOL * max(abs(last_volume), 1e-300):
                raise SimulationError(f"step {step}: walls leaked {inflow:.3e} m^3", step, comm.rank)
            result.audit.append(AuditEntry(step, t, volume, rain_pending, inflow))
            last_volume, rain_pending = volume, 0.0
        phases.append("boundaryAccounting")

        if ctx.output_dir is not None and t >= next_io and t < cfg.t_end:
            io_start = ctx.clock()
            io_index += 1
            path = _snapshot(comm, ctx, f, t, io_index)
            if path is not None:
                result.snapshots.append(path)
            next_io += cfg.t_io
            comm.barrier()
            io_time += ctx.clock() - io_start
            phases.append("snapshot")
        if ctx.trace:
            result.trace.append(phases)
    comm.barrier()
    result.wall = ctx.clock() - start - io_time
    result.steps, result.t = step, t
    result.samples = timer.samples()
    return result


def warm_up() -> None:
    """Compile or load every kernel on a tiny grid so no timed region pays for it."""
    tiny = make_scenario(ScenarioConfig(n_side=5))
    apply_reflective_bc(tiny)
    ax = accumulate_flux_sweep(tiny, "x")
    ay = accumulate_flux_sweep(tiny, "y")
    dt = compute_dt(tiny)
    reduction_level(tiny, ax, ay, dt)
    compute_new_state(tiny, ax, ay, dt)


def prepare(cfg: ScenarioConfig, initial: FieldSet | None = None) -> FieldSet:
    """Global initial state with wall halos filled."""
    fields = make_scenario(cfg) if initial is None else initial.copy()
    apply_reflective_bc(fields)
    return fields


def run_simulation(cfg: ScenarioConfig, dims: tuple[int, int] = (1, 1), *, initial: FieldSet | None = None,
                   output_dir: str | Path | None = None, hooks: Hooks | None = None, trace: bool = False,
                   audit_every: int = 1, timeout: float = 120.0) -> RunReport:
    """Run ``cfg`` on a ``dims = (P_x, P_y)`` grid of rank threads until ``t_end`` or ``max_steps``.

    ``wall_time`` covers the stepping loop only: set-up, the final snapshot and
    any intermediate snapshot writing are excluded.
    """
    px, py = dims
    warm_up()
    fields = prepare(cfg, initial)
    spec = fields.spec
    layouts = decompose(spec, px, py)
    tiles = [scatter(fields, lay) for lay in layouts]
    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    ctx = _Context(cfg, spec, layouts, tiles, hooks or Hooks(), trace, out, max(1, audit_every))
    fabric = Fabric(px * py, timeout)
    results = run_ranks(px * py, _rank_main, ctx, fabric=fabric)
    final = gather([r.tile for r in results], layouts, spec)
    apply_reflective_bc(final)
    lead = results[0]
    snapshots = list(lead.snapshots)
    if out is not None:
        snapshots.append(write_snapshot(out / "snapshot_final.swe", final, lead.t))
    return RunReport(lead.steps, lead.t, lead.wall, merge_samples([r.samples for r in results]),
                     lead.audit, snapshots, final, dims, lead.trace, lead.dt_checks, fabric.stats.as_dict())


@dataclass
class ConvergenceRow:
    n: int
    dx: float
    l1_error: float
    shock_numeric: float
    shock_exact: float
    order: float | None


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    t: float

    @property
    def monotone(self) -> bool:
        errs = [r.l1_error for r in self.rows]
        return all(b < a for a, b in zip(errs, errs[1:]))

    def as_dicts(self) -> list[dict]:
        return [r.__dict__.copy() for r in self.rows]


def dambreak_l1_error(fields: FieldSet, t: float, h_left: float, h_right: float, x_dam: float,
                      g: float = 9.81) -> float:
    """L1 norm of the depth error along the first interior row."""
    x, _ = fields.spec.cell_centers()
    xc = x[1, 1:-1]
    exact, _ = stoker.solution(xc, t, h_left, h_right, x_dam, g)
    return float(np.sum(np.abs(fields.interior("h")[0] - exact)) * fields.spec.dx)


def numeric_shock_position(fields: FieldSet, h_star: float, h_right: float) -> float:
    """Right-most crossing of the mid level between the shock's two depths, interpolated between centres."""
    x, _ = fields.spec.cell_centers()
    xc = x[1, 1:-1]
    h = fields.interior("h")[0]
    mid = 0.5 * (h_star + h_right)
    above = np.nonzero(h >= mid)[0]
    k = above[-1]
    if k + 1 >= len(h):
        return float(xc[k])
    frac = (h[k] - mid) / (h[k] - h[k + 1])
    return float(xc[k] + frac * (xc[k + 1] - xc[k]))


def run_dambreak_1d(resolutions=(200, 400, 800, 1600), *, length: float = 100.0, t_end: float = 5.0,
                    h_left: float = 4.0, h_right: float = 1.0, cfl: float = 0.45, g: float = 9.81,
                    dims: tuple[int, int] = (1, 1)) -> ConvergenceTable:
    """Depth error against the exact wet-bed dam break for each grid resolution."""
    if len(resolutions) < 3:
        raise ValueError("a convergence study needs at least three resolutions")
    x_dam = 0.5 * length
    h_star, _, _ = stoker.star_state(h_left, h_right, g)
    shock_exact = float(stoker.shock_position(t_end, h_left, h_right, x_dam, g))
    rows = []
    for n in resolutions:
        cfg = ScenarioConfig(kind="dambreak-1d", n_side=n, dx=length / n, t_end=t_end, cfl=cfl, g=g,
                             h_left=h_left, h_right=h_right)
        report = run_simulation(cfg, dims, audit_every=1_000_000)
        err = dambreak_l1_error(report.fields, report.t_final, h_left, h_right, x_dam, g)
        order = None
        if rows:
            prev = rows[-1]
            order = math.log(prev.l1_error / err) / math.log(n / prev.n)
        rows.append(ConvergenceRow(n, length / n, err, numeric_shock_position(report.fields, h_star, h_right),
                                   shock_exact, order))
    table = ConvergenceTable(rows, t_end)
    if not table.monotone:
        log.warning("dam-break errors are not strictly decreasing: %s", [r.l1_error for r in rows])
    return table
