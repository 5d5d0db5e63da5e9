"""Relative performance and the harmonic/arithmetic performance-portability metrics.

A platform's relative performance is its achieved FLOP rate over the roof it
could reach at that kernel's intensity (architectural efficiency).  PP1 is the
harmonic mean of those ratios over the platform set and drops to zero when any
platform has zero; PP2 is the plain mean.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .perf import PlatformPeaks

# measurement noise tolerated above the roof before the inputs are declared inconsistent
R_NOISE_LIMIT = 1.02


@dataclass(frozen=True)
class PlatformObservation:
    platform: str
    kernel: str
    n_side: int
    p_achieved: float  # FLOP/s
    a_achieved: float  # FLOP/B
    peaks: PlatformPeaks

    def __post_init__(self):
        if not (self.p_achieved > 0 and self.a_achieved > 0 and self.n_side > 0):
            raise ValueError(f"observation values must be positive: {self}")


def relative_performance(obs: PlatformObservation) -> float:
    roof = min(obs.peaks.p_peak, obs.peaks.b_peak * obs.a_achieved)
    r = obs.p_achieved / roof
    if r > R_NOISE_LIMIT:
        raise ValueError(f"{obs.platform}/{obs.kernel}: relative performance {r:.3f} exceeds the roof; "
                         "peaks and sample disagree")
    if r > 1.0:
        warnings.warn(f"{obs.platform}/{obs.kernel}: relative performance {r:.4f} clipped to 1")
        r = 1.0
    return r


def _check(rs):
    for r in rs:
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"relative performance {r} outside [0, 1]")


def pp1(rs) -> float:
    rs = list(rs)
    _check(rs)
    if not rs or any(r == 0 for r in rs):
        return 0.0
    hm = len(rs) / sum(1.0 / r for r in rs)
    # the harmonic mean never exceeds the arithmetic one; keep rounding from saying otherwise
    return min(hm, pp2(rs))


def pp2(rs) -> float:
    rs = list(rs)
    _check(rs)
    if not rs:
        return 0.0
    return math.fsum(rs) / len(rs)


@dataclass
class SweepPoint:
    kernel: str
    n_side: int
    pp1: float
    pp2: float
    rs: dict[str, float]
    missing: list[str] = field(default_factory=list)


@dataclass
class PortabilityReport:
    platforms: list[str]
    points: list[SweepPoint]

    def series(self, kernel: str) -> list[tuple[int, float, float]]:
        return [(p.n_side, p.pp1, p.pp2) for p in self.points if p.kernel == kernel]

    def table(self, n_side: int) -> list[tuple[str, float, float]]:
        """Fixed-size view: one ``(kernel, PP1, PP2)`` row per kernel."""
        return [(p.kernel, p.pp1, p.pp2) for p in self.points if p.n_side == n_side]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kernel", "n_side", "pp1", "pp2", *self.platforms, "missing"])
            for p in self.points:
                w.writerow([p.kernel, p.n_side, f"{p.pp1:.4f}", f"{p.pp2:.4f}",
                            *(f"{p.rs[h]:.4f}" if h in p.rs else "" for h in self.platforms),
                            ";".join(p.missing)])
        return path

    def to_json(self) -> str:
        return json.dumps({"platforms": self.platforms,
                           "points": [p.__dict__ for p in self.points]}, indent=2)


def pp_sweep(observations: list[PlatformObservation], platforms: list[str] | None = None) -> PortabilityReport:
    """PP1/PP2 per ``(kernel, n_side)`` over the platform set.

    A point lacking an observation for some platform scores zero on both
    metrics (the platform is unsupported there); the gap is listed in
    ``missing``.
    """
    if platforms is None:
        platforms = sorted({o.platform for o in observations})
    grouped: dict[tuple[str, int], dict[str, float]] = defaultdict(dict)
    for obs in observations:
        if obs.platform in platforms:
            grouped[(obs.kernel, obs.n_side)][obs.platform] = relative_performance(obs)
    points = []
    for (kernel, n_side) in sorted(grouped):
        rs = grouped[(kernel, n_side)]
        missing = [h for h in platforms if h not in rs]
        values = [rs.get(h, 0.0) for h in platforms]
        if missing:
            points.append(SweepPoint(kernel, n_side, 0.0, 0.0, rs, missing))
        else:
            points.append(SweepPoint(kernel, n_side, pp1(values), pp2(values), rs))
    return PortabilityReport(list(platforms), points)


def read_observations(path, peaks: dict[str, PlatformPeaks]) -> list[PlatformObservation]:
    """Rows ``platform,kernel,n_side,p_achieved_gflops,a_achieved_flops_per_byte``."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            name = row["platform"]
            if name not in peaks:
                raise KeyError(f"no peaks for platform {name!r}")
            out.append(PlatformObservation(name, row["kernel"], int(row["n_side"]),
                                           float(row["p_achieved_gflops"]) * 1e9,
                                           float(row["a_achieved_flops_per_byte"]), peaks[name]))
    return out


def write_observations(path, observations: list[PlatformObservation]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["platform", "kernel", "n_side", "p_achieved_gflops", "a_achieved_flops_per_byte"])
        for o in observations:
            w.writerow([o.platform, o.kernel, o.n_side, repr(o.p_achieved / 1e9), repr(o.a_achieved)])
    return path


def read_portability_table(path=None) -> list[tuple[str, float, float]]:
    """``kernel,pp1,pp2`` rows; defaults to the bundled reference table of four GPU systems."""
    if path is None:
        with resources.as_file(resources.files("sweperf.data") / "portability_table.csv") as p:
            return read_portability_table(p)
    with open(path, newline="") as fh:
        return [(r["kernel"], float(r["pp1"]), float(r["pp2"])) for r in csv.DictReader(fh)]


def format_table(rows: list[tuple[str, float, float]]) -> str:
    width = max(len(k) for k, _, _ in rows)
    lines = [f"{'kernel':<{width}}  {'PP1':>6}  {'PP2':>6}"]
    lines += [f"{k:<{width}}  {a:6.4f}  {b:6.4f}" for k, a, b in rows]
    return "\n".join(lines)
