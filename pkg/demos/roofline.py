"""Where the five hot kernels sit under this machine's roofline.

First probe the host with the FMA ladder, then time a short run and place each
kernel at (intensity / machine balance, FLOP rate / compute peak).
"""

from sweperf.driver import run_simulation
from sweperf.grid import ScenarioConfig
from sweperf.perf import estimate_peaks, reference_peaks, roofline_normalize

est = estimate_peaks(repetitions=3)
host = est.peaks
print(f"host: {host.p_peak / 1e9:.2f} GFLOP/s, {host.b_peak / 1e9:.2f} GB/s, balance {host.a_thresh:.3f} FLOP/B")
for t in est.trials:
    print(f"  n={t.size:>8} fmas={t.fmas:>2}  {t.flop_rate / 1e9:8.2f} GFLOP/s  {t.byte_rate / 1e9:8.2f} GB/s")

report = run_simulation(ScenarioConfig(n_side=512, t_end=1e9, max_steps=40))
print(f"\n{'kernel':<12} {'FLOP/B':>7} {'GFLOP/s':>8} {'a_norm':>7} {'p_norm':>7}")
for s in report.samples:
    p_norm, a_norm = roofline_normalize(s, host)
    print(f"{s.name:<12} {s.a_achieved:7.3f} {s.p_achieved / 1e9:8.3f} {a_norm:7.3f} {p_norm:7.3f}")

print("\nreference GPU balances:")
for name, peaks in reference_peaks().items():
    print(f"  {name:<15} {peaks.a_thresh:.4f} FLOP/B")
