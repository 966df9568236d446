"""
Convergence as eps -> 0
=======================

Sweep eps = 0.1 * 2^-k, k = 0..5, check that doubling the resolution
barely moves any norm, and fit log-log slopes.  Pass an output directory
to keep the CSV/JSON reports and a gnuplot script.
"""

import sys

import numpy as np

from oceanlayer import harness

cfg = harness.resolve_config()
rep = harness.run_sweep(cfg, jobs=4, out_dir=sys.argv[1] if len(sys.argv) > 1 else None)

print(f"{'eps':>10s} {'nodes':>6s} {'L2':>10s} {'Linf':>10s} {'grad':>10s} {'energy':>8s}")
for row in rep.rows:
    print(
        f"{row['eps']:10.5f} {row['n_nodes']:6d} {row['l2']:10.3e} {row['linf']:10.3e}"
        f" {row['grad']:10.3e} {row['energy_ratio']:8.3f}"
    )

print("largest change under refinement:")
for key, change in rep.gate_changes.items():
    print(f"  {key:>12s}: {change:.2%}")

print("fitted slopes:")
for key in ("l2", "linf", "grad"):
    r = rep.rates[key]
    print(f"  {key:>5s}: {r.slope:.3f}  (r^2 = {r.r_squared:.4f})")

# the sup-norm slope keeps climbing towards 1 as eps shrinks
local = np.diff(np.log(rep.column("linf"))) / np.diff(np.log(rep.column("eps")))
print("local Linf slopes:", " ".join(f"{s:.2f}" for s in local))
