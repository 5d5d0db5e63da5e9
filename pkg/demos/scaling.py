"""Strong and weak scaling at desk scale.

Worker counts above the core count still run, just oversubscribed, and the
harness says so.  Times are medians over repetitions.
"""

import os

from sweperf.cli import cmd_scale_strong, cmd_scale_weak
from sweperf.grid import ScenarioConfig

workers = [1, 2, 4]
print(f"{os.cpu_count()} cores available")

strong = cmd_scale_strong(ScenarioConfig(n_side=512, t_end=1e9, max_steps=20), workers, repetitions=3)
print("strong, n_side=512")
for r in strong.rows:
    print(f"  {r.workers} workers  {r.time:6.3f} s  speedup {r.speedup:5.2f}  efficiency {r.efficiency:5.2f}")
for v in strong.violations:
    print("  flagged:", v)

weak = cmd_scale_weak(ScenarioConfig(t_end=1e9, max_steps=20), workers, 256 * 256, repetitions=3)
print("weak, 65536 cells per worker")
for r, n in zip(weak.rows, weak.n_sides):
    print(f"  {r.workers} workers  n_side={n:<4} {r.time:6.3f} s  efficiency {r.efficiency:5.2f}")
