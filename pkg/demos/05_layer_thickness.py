"""
Where the layer lives
=====================

Outside x = eps ln(1/eps) the viscous and limit solutions agree better
and better; inside x = eps they differ by about the size of the trace.
"""

from oceanlayer import harness

cfg = harness.resolve_config({"sweep": {"eps": [1e-2, 1e-3, 1e-4]}})
rep = harness.run_thickness(cfg, jobs=3)
print(f"{'eps':>8s} {'outer_sup':>10s} {'inner_sup':>10s} {'sup|u0(0,t)|':>13s}")
for row in rep.rows:
    print(f"{row['eps']:8.0e} {row['outer_sup']:10.3e} {row['inner_sup']:10.3e} {row['trace_sup']:13.3e}")
print(rep.thickness())
