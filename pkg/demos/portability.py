"""Performance-portability scores from per-platform kernel observations.

The observations here are made up: each platform reaches a fixed fraction of
its memory roof.  The point is the bookkeeping.  A platform that never ran a
given size scores the whole point zero.
"""

from sweperf.perf import reference_peaks
from sweperf.ppmetrics import PlatformObservation, format_table, pp_sweep, read_portability_table

peaks = reference_peaks()
share = {"AURORA": 0.35, "FRONTIER": 0.55, "JEDI": 0.7, "JUWELS BOOSTER": 0.6}
intensity = 1.16
observations = []
for kernel in ("fluxX", "newState"):
    for n in (1024, 4096, 16384):
        for name, p in peaks.items():
            if name == "AURORA" and n == 16384:
                continue  # pretend it ran out of memory
            rate = share[name] * p.b_peak * intensity * (0.9 if kernel == "newState" else 1.0)
            observations.append(PlatformObservation(name, kernel, n, rate, intensity, p))

report = pp_sweep(observations)
for p in report.points:
    note = f"  missing: {', '.join(p.missing)}" if p.missing else ""
    print(f"{p.kernel:<9} n={p.n_side:<6} PP1={p.pp1:.4f} PP2={p.pp2:.4f}{note}")

print("\nbundled reference table:")
print(format_table(read_portability_table()))
