"""Kernel cost models and timing, empirical machine peaks, roofline coordinates and scaling metrics.

FLOP convention: ``+ - * /`` and ``sqrt`` count one each; comparisons,
``abs``, ``min``/``max`` and sign flips are free.  Byte counts are algorithmic
traffic in 8-byte words: every field value a kernel touches is read once and
every output written once, whatever the caches do.
"""

from __future__ import annotations

import csv
import statistics
import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from numba import njit

KERNELS = ("computeDt", "fluxX", "fluxY", "dtReduction", "newState")


@dataclass(frozen=True)
class KernelCostModel:
    """Per-pass FLOP and byte counts of one kernel on an ``n_x`` by ``n_y`` tile.

    Flux kernels do their arithmetic per edge (``n_x + 1`` edges per row for
    the x sweep, ``n_y + 1`` per column for y) and their accumulation per cell.
    """

    name: str
    flops_per_cell: float
    bytes_per_cell: float
    flops_per_edge: float = 0.0
    axis: str | None = None

    def __post_init__(self):
        if self.flops_per_cell + self.flops_per_edge <= 0 or self.bytes_per_cell <= 0:
            raise ValueError(f"cost model {self.name} needs positive counts")

    def edges(self, n_x: int, n_y: int) -> int:
        if self.axis == "x":
            return (n_x + 1) * n_y
        if self.axis == "y":
            return n_x * (n_y + 1)
        return 0

    def flops(self, n_x: int, n_y: int) -> float:
        return self.flops_per_cell * n_x * n_y + self.flops_per_edge * self.edges(n_x, n_y)

    def bytes(self, n_x: int, n_y: int) -> float:
        return self.bytes_per_cell * n_x * n_y

    def intensity(self, n_x: int, n_y: int) -> float:
        return self.flops(n_x, n_y) / self.bytes(n_x, n_y)


# wet cells, no entropy-fix activation, no friction; see test_perf for the counting check
COST_MODELS = {
    # 2 div, g*h, sqrt, 2 add, dx/speed
    "computeDt": KernelCostModel("computeDt", 7, 3 * 8),
    # Roe averages 19, decomposition 18, entropy-fix speeds 10, upwind split 6, assembly 12;
    # then 3 accumulations from each of the two edges of a cell
    "fluxX": KernelCostModel("fluxX", 6, (4 + 3) * 8, flops_per_edge=65, axis="x"),
    "fluxY": KernelCostModel("fluxY", 6, (4 + 3) * 8, flops_per_edge=65, axis="y"),
    # sum of two accumulators, scale, subtract, plus rain
    "dtReduction": KernelCostModel("dtReduction", 4, 3 * 8),
    # three components of the same, rain on h
    "newState": KernelCostModel("newState", 10, (9 + 3) * 8),
}


@dataclass
class KernelSample:
    name: str
    calls: int
    time: float
    flops: float
    bytes: float

    @property
    def p_achieved(self) -> float:
        return self.flops / self.time

    @property
    def a_achieved(self) -> float:
        return self.flops / self.bytes

    def as_dict(self) -> dict:
        return {"calls": self.calls, "total_s": self.time, "flops": self.flops, "bytes": self.bytes}


class KernelTimer:
    """Accumulates fenced wall time, call counts and modelled work per kernel on one rank.

    With a communicator every region starts and stops on a barrier across
    ranks, so a region's time covers the slowest rank.
    """

    def __init__(self, comm=None, clock=time.perf_counter, models=COST_MODELS):
        self.comm = comm
        self.clock = clock
        self.models = models
        self.time: dict[str, float] = {}
        self.calls: dict[str, int] = {}
        self.flops: dict[str, float] = {}
        self.bytes: dict[str, float] = {}

    def _fence(self):
        if self.comm is not None and self.comm.size > 1:
            self.comm.barrier()

    @contextmanager
    def region(self, name: str, n_x: int, n_y: int):
        self._fence()
        start = self.clock()
        yield
        self._fence()
        elapsed = self.clock() - start
        self.time[name] = self.time.get(name, 0.0) + elapsed
        self.calls[name] = self.calls.get(name, 0) + 1
        model = self.models.get(name)
        if model is not None:
            self.flops[name] = self.flops.get(name, 0.0) + model.flops(n_x, n_y)
            self.bytes[name] = self.bytes.get(name, 0.0) + model.bytes(n_x, n_y)

    def total(self) -> float:
        return sum(self.time.values())

    def samples(self) -> list[KernelSample]:
        return [KernelSample(n, self.calls[n], self.time[n], self.flops[n], self.bytes[n])
                for n in self.time if n in self.flops]


def merge_samples(per_rank: list[list[KernelSample]]) -> list[KernelSample]:
    """Combine rank-local samples: work adds up, time is the slowest rank's."""
    merged: dict[str, KernelSample] = {}
    for samples in per_rank:
        for s in samples:
            m = merged.get(s.name)
            if m is None:
                merged[s.name] = KernelSample(s.name, s.calls, s.time, s.flops, s.bytes)
            else:
                m.time = max(m.time, s.time)
                m.flops += s.flops
                m.bytes += s.bytes
    return [merged[n] for n in KERNELS if n in merged] + [m for n, m in merged.items() if n not in KERNELS]


@dataclass(frozen=True)
class PlatformPeaks:
    platform: str
    p_peak: float  # FLOP/s
    b_peak: float  # B/s
    source: str = "supplied"

    def __post_init__(self):
        if not (self.p_peak > 0 and self.b_peak > 0):
            raise ValueError(f"peaks must be positive, got p={self.p_peak}, b={self.b_peak}")

    @property
    def a_thresh(self) -> float:
        """Machine balance: intensity where the bandwidth roof meets the compute roof."""
        return self.p_peak / self.b_peak

    def roof(self, intensity: float) -> float:
        return min(self.p_peak, self.b_peak * intensity)


def read_peaks_csv(path) -> dict[str, PlatformPeaks]:
    """``platform,p_peak_gflops,b_peak_gbs`` rows keyed by platform."""
    with open(path, newline="") as fh:
        return {row["platform"]: PlatformPeaks(row["platform"], float(row["p_peak_gflops"]) * 1e9,
                                               float(row["b_peak_gbs"]) * 1e9, "supplied")
                for row in csv.DictReader(fh)}


def write_peaks_csv(path, peaks: list[PlatformPeaks]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["platform", "p_peak_gflops", "b_peak_gbs"])
        for p in peaks:
            w.writerow([p.platform, f"{p.p_peak / 1e9:.2f}", f"{p.b_peak / 1e9:.2f}"])
    return path


def reference_peaks() -> dict[str, PlatformPeaks]:
    """Published empirical peaks of four GPU systems (one GPU, GCD or tile each)."""
    with resources.as_file(resources.files("sweperf.data") / "reference_peaks.csv") as path:
        return read_peaks_csv(path)


@njit(cache=True, nogil=True)
def _ert_kernel(a, b, c, d, fmas):
    for i in range(a.shape[0]):
        bi = b[i]
        ci = c[i]
        x = a[i] * bi + ci
        for _ in range(fmas - 1):
            x = x * bi + ci
        d[i] = x


@dataclass
class PeakTrial:
    size: int
    fmas: int
    flops: float
    bytes: float
    seconds: float  # median over repetitions

    @property
    def flop_rate(self) -> float:
        return self.flops / self.seconds

    @property
    def byte_rate(self) -> float:
        return self.bytes / self.seconds


@dataclass
class PeakEstimate:
    peaks: PlatformPeaks
    trials: list[PeakTrial] = field(default_factory=list)
    dropped: list[tuple[int, int]] = field(default_factory=list)


def estimate_peaks(sizes=(1 << 12, 1 << 16, 1 << 20, 1 << 23), fmas_ladder=(1, 2, 8, 32, 64),
                   repetitions: int = 5, *, clock=time.perf_counter, min_seconds: float | None = None,
                   elements_per_timing: int = 1 << 22, platform: str = "host") -> PeakEstimate:
    """ERT-style probe: ``d = a*b + c`` streams, with extra FMAs per element for higher intensity.

    Each trial reads three arrays and writes one (32 B per element) and does
    ``2 * fmas`` FLOPs per element.  The bandwidth peak is the best median byte
    rate of the one-FMA streaming trials, the compute peak the best median
    FLOP rate of any trial.  Trials whose median time is below ``min_seconds``
    (default: 100 clock ticks) are dropped with a warning.
    """
    if repetitions < 1:
        raise ValueError("need at least one repetition")
    if min_seconds is None:
        min_seconds = 100 * time.get_clock_info("perf_counter").resolution
    rng = np.random.default_rng(0)
    est = PeakEstimate(peaks=None)
    for n in sizes:
        a, b, c = (rng.uniform(0.5, 1.0, n) for _ in range(3))
        b *= 0.5
        d = np.empty(n)
        inner = max(1, elements_per_timing // n)
        for fmas in fmas_ladder:
            _ert_kernel(a, b, c, d, fmas)  # warm-up and compile
            durations = []
            for _ in range(repetitions):
                start = clock()
                for _ in range(inner):
                    _ert_kernel(a, b, c, d, fmas)
                durations.append(clock() - start)
            seconds = statistics.median(durations)
            if seconds < min_seconds or seconds <= 0:
                warnings.warn(f"dropping peak trial n={n}, fmas={fmas}: {seconds:.2e} s is below timer resolution")
                est.dropped.append((n, fmas))
                continue
            est.trials.append(PeakTrial(n, fmas, 2.0 * fmas * n * inner, 32.0 * n * inner, seconds))
    if not est.trials:
        raise RuntimeError("every peak trial fell below the timer resolution")
    lowest = min(t.fmas for t in est.trials)
    p_peak = max(t.flop_rate for t in est.trials)
    b_peak = max(t.byte_rate for t in est.trials if t.fmas == lowest)
    est.peaks = PlatformPeaks(platform, p_peak, b_peak, "empirical")
    return est


def roofline_normalize(sample: KernelSample, peaks: PlatformPeaks) -> tuple[float, float]:
    """``(p_achieved / p_peak, a_achieved / a_thresh)``."""
    if not (peaks.p_peak > 0 and peaks.b_peak > 0):
        raise ValueError("peaks must be positive")
    return sample.p_achieved / peaks.p_peak, sample.a_achieved / peaks.a_thresh


def write_roofline_csv(path, samples: list[KernelSample], peaks: PlatformPeaks) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kernel", "p_achieved", "a_achieved", "p_norm", "a_norm"])
        for s in samples:
            p_norm, a_norm = roofline_normalize(s, peaks)
            w.writerow([s.name, repr(s.p_achieved), repr(s.a_achieved), repr(p_norm), repr(a_norm)])
    return path


@dataclass
class ScalingRow:
    workers: int
    time: float
    speedup: float
    efficiency: float


def scaling_metrics(t_node: float | None, runs: list[tuple[int, float]], mode: str = "strong",
                    base_workers: int | None = None) -> list[ScalingRow]:
    """Speedup and efficiency of each ``(workers, time)`` run against the baseline time ``t_node``.

    Strong scaling: ``speedup = t_node / t`` and efficiency is speedup per
    added worker.  Weak scaling: ``efficiency = t_node / t`` and speedup is the
    scaled speedup ``efficiency * workers / base_workers``.
    """
    if t_node is None or not t_node > 0:
        raise ValueError("scaling metrics need a positive baseline time")
    if mode not in ("strong", "weak"):
        raise ValueError(f"mode must be 'strong' or 'weak', got {mode!r}")
    if base_workers is None:
        base_workers = min((w for w, _ in runs), default=1)
    rows = []
    for workers, t in runs:
        ratio = t_node / t
        growth = workers / base_workers
        if mode == "strong":
            rows.append(ScalingRow(workers, t, ratio, ratio / growth))
        else:
            rows.append(ScalingRow(workers, t, ratio * growth, ratio))
    return rows


def write_scaling_csv(path, rows: list[ScalingRow]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["workers", "time_s", "speedup", "efficiency"])
        for r in rows:
            w.writerow([r.workers, repr(r.time), repr(r.speedup), repr(r.efficiency)])
    return path
