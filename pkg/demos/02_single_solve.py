"""
One viscous solve against its limit
===================================

Solve both systems for the default forcing on a grid graded towards
x = 0, subtract the corrector and look at what is left.
"""

import numpy as np

from oceanlayer import harness
from oceanlayer.analysis import hardy_check

cfg = harness.resolve_config()
eps = 1e-2
case = harness.solve_case(cfg, eps)
grid = case.grid
print(f"eps = {eps}: {grid.n_nodes} nodes, min dx = {grid.min_dx:.2e}, {grid.n_steps} steps")

# the limit trace at x = 0 is what the layer has to cancel
trace = case.limit.trace
print(f"max |u0(0, t)| = {np.abs(trace.u).max():.4f}")

# u_eps - u0 is O(1) in the layer, U = u_eps - u0 - theta_u is small everywhere
k = -1
x = grid.nodes
raw = case.viscous.u[k] - case.limit.u[k]
print(f"at t = T: max |u_eps - u0| = {np.abs(raw).max():.2e}, max |U| = {np.abs(case.diff.U[k]).max():.2e}")
for xi in (0.0, eps, 3 * eps, 10 * eps, 0.5):
    i = np.searchsorted(x, xi)
    print(f"  x = {x[i]:.4f}   u_eps - u0 = {raw[i]:+.3e}   U = {case.diff.U[k][i]:+.3e}")

# the difference fields meet the Hardy hypothesis, U(0) = 0
print("Hardy (lhs, rhs, ok):", tuple(hardy_check(case.diff.U[k], grid)))

row = harness.case_row(cfg, case)
for key in ("l2", "linf", "grad", "energy_ratio", "bc_residual"):
    print(f"  {key:>13s} = {row[key]:.4e}")
