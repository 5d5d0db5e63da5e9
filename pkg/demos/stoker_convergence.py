"""Grid convergence against the exact dam break on a wet bed."""

from sweperf.driver import run_dambreak_1d

table = run_dambreak_1d((200, 400, 800, 1600))
print(f"{'cells':>6} {'dx':>8} {'L1(h)':>9} {'order':>6} {'shock':>9} {'exact':>9}")
for r in table.rows:
    order = f"{r.order:.3f}" if r.order is not None else "-"
    print(f"{r.n:6d} {r.dx:8.4f} {r.l1_error:9.5f} {order:>6} {r.shock_numeric:9.3f} {r.shock_exact:9.3f}")
print("errors strictly decreasing:", table.monotone)
