"""
The boundary-layer corrector
============================

The viscous problem pins u and psi to zero at x = 0, while the eps = 0
limit only ties them together there.  The mismatch is absorbed by an
exponential layer of width eps / r.
"""

import numpy as np

from oceanlayer import BoundaryTrace, PhysParams, corrector_coeffs, corrector_eval, corrector_residuals
from oceanlayer.corrector import corrector_norm_table
from oceanlayer.analysis import fit_rate

params = PhysParams(U0=0.5, lam=1.0, L=1.0, T=1.0)
print(f"decay rate r = {params.r}")

# a unit trace u0(0, t) = 1 and a moderately thin layer
times = np.linspace(0.0, 1.0, 11)
trace = BoundaryTrace.analytic(params, np.ones_like, times)
coeffs = corrector_coeffs(params, 0.3, trace)
print(f"E = {coeffs.E:.7f}  A = {coeffs.A[0]:.7f}  C = {coeffs.C[0]:.7f}")

x = np.linspace(0.0, 1.0, 6)
theta_u, theta_psi = corrector_eval(coeffs, x, 0)
for xi, tu, tp in zip(x, theta_u, theta_psi):
    print(f"  x = {xi:.1f}   theta_u = {tu:+.6f}   theta_psi = {tp:+.6f}")

# the layer equations hold to round-off
print("residuals R1, R2:", corrector_residuals(coeffs))

# norms scale like eps^(1/2) and, with an x weight, like eps^(3/2)
trace = BoundaryTrace.analytic(params, np.sin, np.linspace(0.0, 1.0, 1001))
eps = [1e-1, 1e-2, 1e-3, 1e-4]
table = corrector_norm_table(params, eps, trace)
for col in ("theta_u", "theta_u_t", "x_theta_u_t", "x_eps_theta_u_tx"):
    slope = fit_rate(eps, [row[col] for row in table]).slope
    print(f"  slope of ||{col}||: {slope:.3f}")
