"""Command-line front end: ``sweperf <subcommand> [options]``.

Subcommands: run, scale-strong, scale-weak, roofline, peaks, ppreport, validate.
Every experiment writes CSV/JSON into ``--out``; plotting is left to other tools.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import statistics
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

from .decomposition import rank_grid
from .driver import Hooks, run_simulation
from .grid import ScenarioConfig, read_config
from .io import write_csv
from .perf import (estimate_peaks, read_peaks_csv, reference_peaks, scaling_metrics, write_peaks_csv,
                   write_roofline_csv, write_scaling_csv)
from .ppmetrics import read_observations, pp_sweep
from .validation import run_validation

log = logging.getLogger("sweperf")

# float64 arrays per padded cell at peak: global h, hu, hv, z, their tiles, six accumulators, final gather
ARRAYS_PER_CELL = 18


class FootprintError(MemoryError):
    pass


def estimate_footprint(n_side: int) -> int:
    return ARRAYS_PER_CELL * 8 * (n_side + 2) ** 2


def available_memory() -> int:
    try:
        return os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return 1 << 62


def check_footprint(n_side: int, available: int | None = None) -> int:
    need = estimate_footprint(n_side)
    have = available_memory() if available is None else available
    if need > have:
        raise FootprintError(f"n_side={n_side} needs about {need / 2**30:.1f} GiB, only {have / 2**30:.1f} GiB available")
    return need


def _warn_oversubscribed(workers):
    cores = os.cpu_count() or 1
    for w in workers:
        if w > cores:
            warnings.warn(f"{w} workers exceed the {cores} available cores; running oversubscribed")


def _timed_runs(cfg: ScenarioConfig, workers: int, repetitions: int) -> float:
    times = [run_simulation(cfg, rank_grid(workers), audit_every=1_000_000).wall_time for _ in range(repetitions)]
    return statistics.median(times)


@dataclass
class ScalingResult:
    rows: list
    violations: list[str]
    n_sides: list[int]


def cmd_scale_strong(cfg: ScenarioConfig, workers: list[int], repetitions: int = 5,
                     out_dir: Path | None = None) -> ScalingResult:
    """Fixed global grid; median loop time per worker count; speedup against the fewest workers."""
    check_footprint(cfg.n_side)
    _warn_oversubscribed(workers)
    workers = sorted(workers)
    runs = [(w, _timed_runs(cfg, w, repetitions)) for w in workers]
    rows = scaling_metrics(runs[0][1], runs, "strong")
    violations = [f"time rose from {a.time:.4g}s at {a.workers} to {b.time:.4g}s at {b.workers} workers"
                  for a, b in zip(rows, rows[1:]) if b.time > a.time]
    for v in violations:
        log.warning("strong scaling: %s", v)
    if out_dir is not None:
        write_scaling_csv(Path(out_dir) / "scaling_strong.csv", rows)
    return ScalingResult(rows, violations, [cfg.n_side] * len(rows))


def weak_n_side(workers: int, cells_per_worker: int) -> int:
    """Smallest side whose square holds ``workers * cells_per_worker`` cells."""
    total = workers * cells_per_worker
    side = math.isqrt(total)
    return side if side * side == total else side + 1


def cmd_scale_weak(cfg: ScenarioConfig, workers: list[int], cells_per_worker: int, repetitions: int = 5,
                   out_dir: Path | None = None) -> ScalingResult:
    workers = sorted(workers)
    sides = [weak_n_side(w, cells_per_worker) for w in workers]
    check_footprint(max(sides))
    _warn_oversubscribed(workers)
    runs = [(w, _timed_runs(cfg.replace(n_side=n), w, repetitions)) for w, n in zip(workers, sides)]
    rows = scaling_metrics(runs[0][1], runs, "weak")
    if out_dir is not None:
        write_scaling_csv(Path(out_dir) / "scaling_weak.csv", rows)
    return ScalingResult(rows, [], sides)


def _load_cfg(args) -> ScenarioConfig:
    cfg = read_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if getattr(args, "n_side", None):
        overrides["n_side"] = args.n_side
    if getattr(args, "steps", None):
        overrides["max_steps"] = args.steps
        overrides["t_end"] = max(cfg.t_end, 1e9)
    return cfg.replace(**overrides) if overrides else cfg


def _peaks_for(args):
    if args.peaks:
        table = read_peaks_csv(args.peaks)
        if args.platform:
            return table[args.platform]
        return next(iter(table.values()))
    return estimate_peaks(repetitions=args.repetitions).peaks


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sweperf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=False):
        p.add_argument("--config", help="key=value scenario file")
        p.add_argument("--out", default="sweperf-out", help="output directory")
        p.add_argument("--n-side", type=int)
        p.add_argument("--steps", type=int, help="stop after this many steps")
        p.add_argument("--repetitions", type=int, default=5)
        if workers:
            p.add_argument("--workers", type=int, nargs="+", default=[1])

    p = sub.add_parser("run", help="run one simulation and write its summary and snapshot")
    common(p)
    p.add_argument("--dims", type=int, nargs=2, default=(1, 1), metavar=("PX", "PY"))
    p.add_argument("--csv", action="store_true", help="also dump the final state as CSV")
    p = sub.add_parser("scale-strong", help="strong scaling over worker counts")
    common(p, workers=True)
    p = sub.add_parser("scale-weak", help="weak scaling at fixed cells per worker")
    common(p, workers=True)
    p.add_argument("--cells-per-worker", type=int, required=True)
    p = sub.add_parser("roofline", help="kernel roofline coordinates for one run")
    common(p)
    p.add_argument("--peaks", help="peaks CSV; probed on this host when omitted")
    p.add_argument("--platform")
    p = sub.add_parser("peaks", help="probe this host's compute and bandwidth peaks")
    common(p)
    p.add_argument("--reference", action="store_true", help="write the bundled reference peaks instead")
    p = sub.add_parser("ppreport", help="portability metrics from an observations CSV")
    common(p)
    p.add_argument("--observations", required=True)
    p.add_argument("--peaks", help="peaks CSV; bundled reference peaks when omitted")
    p.add_argument("--platforms", nargs="+")
    p = sub.add_parser("validate", help="run the solver self-checks")
    p.add_argument("--out", default=None)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--inject", choices=["beta-sign", "accumulation-order"], help=argparse.SUPPRESS)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if getattr(args, "repetitions", 1) < 1:
        parser.error("--repetitions must be at least 1")

    try:
        if args.command == "run":
            cfg = _load_cfg(args)
            check_footprint(cfg.n_side)
            out = _out(args)
            report = run_simulation(cfg, tuple(args.dims), output_dir=out)
            (out / "summary.json").write_text(report.summary_json())
            if args.csv:
                write_csv(out / "final.csv", report.fields)
            print(report.summary_json())
        elif args.command == "scale-strong":
            res = cmd_scale_strong(_load_cfg(args), args.workers, args.repetitions, _out(args))
            _print_rows(res.rows)
        elif args.command == "scale-weak":
            res = cmd_scale_weak(_load_cfg(args), args.workers, args.cells_per_worker, args.repetitions, _out(args))
            _print_rows(res.rows)
        elif args.command == "roofline":
            cfg = _load_cfg(args)
            check_footprint(cfg.n_side)
            peaks = _peaks_for(args)
            report = run_simulation(cfg)
            path = write_roofline_csv(_out(args) / "roofline.csv", report.samples, peaks)
            print(path.read_text(), end="")
        elif args.command == "peaks":
            peaks = list(reference_peaks().values()) if args.reference else \
                [estimate_peaks(repetitions=args.repetitions).peaks]
            path = write_peaks_csv(_out(args) / "peaks.csv", peaks)
            print(path.read_text(), end="")
        elif args.command == "ppreport":
            peaks = read_peaks_csv(args.peaks) if args.peaks else reference_peaks()
            report = pp_sweep(read_observations(args.observations, peaks), args.platforms)
            out = _out(args)
            report.to_csv(out / "pp_report.csv")
            (out / "pp_report.json").write_text(report.to_json())
            print((out / "pp_report.csv").read_text(), end="")
        elif args.command == "validate":
            hooks = None
            if args.inject == "beta-sign":
                hooks = Hooks(beta_sign=-1.0)
            elif args.inject == "accumulation-order":
                hooks = Hooks(rank_dependent_order=True)
            results = run_validation(hooks, quick=args.quick)
            payload = json.dumps([r.as_dict() for r in results], indent=2)
            if args.out:
                _out(args).joinpath("validation.json").write_text(payload)
            print(payload)
            return 0 if all(r.passed for r in results) else 1
    except (FootprintError, ValueError, KeyError, OSError) as exc:
        print(f"sweperf {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def _print_rows(rows):
    print("workers,time_s,speedup,efficiency")
    for r in rows:
        print(f"{r.workers},{r.time:.6g},{r.speedup:.4f},{r.efficiency:.4f}")


if __name__ == "__main__":
    sys.exit(main())
