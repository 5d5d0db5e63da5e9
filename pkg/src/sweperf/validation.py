"""Self-checks of the solver: still water, symmetry, decomposition equivalence, dam-break convergence."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .driver import Hooks, prepare, run_dambreak_1d, run_simulation
from .grid import ScenarioConfig


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def check_lake_at_rest(n_side=64, steps=200, bump_height=0.5, hooks=None, tol=1e-12) -> CheckResult:
    cfg = ScenarioConfig(kind="lake-at-rest", n_side=n_side, bump_height=bump_height, t_end=1e9, max_steps=steps)
    eta0 = prepare(cfg).surface()
    report = run_simulation(cfg, hooks=hooks)
    dev = float(np.max(np.abs(report.fields.surface() - eta0)))
    return CheckResult("lake-at-rest", dev <= tol, dev, tol, f"{report.steps} steps, n_side={n_side}")


def symmetry_error(h: np.ndarray) -> float:
    """Worst of the transpose and the two axis-mirror mismatches of a square depth field."""
    return float(max(np.max(np.abs(h - h.T)), np.max(np.abs(h - h[::-1, :])), np.max(np.abs(h - h[:, ::-1]))))


def check_symmetry(n_side=64, t_end=1.0, tol=1e-12) -> CheckResult:
    cfg = ScenarioConfig(kind="circular-dam-break", n_side=n_side, t_end=t_end)
    report = run_simulation(cfg)
    err = symmetry_error(report.fields.interior("h"))
    return CheckResult("symmetry", err <= tol, err, tol, f"{report.steps} steps, n_side={n_side}")


def check_decomposition(n_side=64, steps=50, dims=((2, 2), (4, 1)), hooks=None) -> CheckResult:
    cfg = ScenarioConfig(kind="circular-dam-break", n_side=n_side, t_end=1e9, max_steps=steps)
    ref = run_simulation(cfg).fields
    worst = 0.0
    identical = True
    for d in dims:
        got = run_simulation(cfg, d, hooks=hooks).fields
        for name in ("h", "hu", "hv"):
            a, b = getattr(ref, name), getattr(got, name)
            identical &= bool(np.array_equal(a, b))
            worst = max(worst, float(np.max(np.abs(a - b))))
    return CheckResult("decomposition", identical, worst, 0.0, f"bitwise vs (1, 1) for {list(dims)}")


def check_stoker(resolutions=(100, 200, 400), min_order=0.6) -> CheckResult:
    table = run_dambreak_1d(resolutions)
    orders = [r.order for r in table.rows if r.order is not None]
    shock_ok = all(abs(r.shock_numeric - r.shock_exact) <= 2 * r.dx for r in table.rows)
    ok = table.monotone and min(orders) >= min_order and shock_ok
    return CheckResult("stoker", ok, min(orders), min_order,
                       f"L1 errors {[round(r.l1_error, 5) for r in table.rows]}")


def run_validation(hooks: Hooks | None = None, quick: bool = False) -> list[CheckResult]:
    n = 32 if quick else 64
    return [
        check_lake_at_rest(n_side=n, steps=100 if quick else 200, hooks=hooks),
        check_symmetry(n_side=n, t_end=0.5 if quick else 1.0),
        check_decomposition(n_side=n, steps=20 if quick else 50, hooks=hooks),
        check_stoker((50, 100, 200) if quick else (100, 200, 400)),
    ]
