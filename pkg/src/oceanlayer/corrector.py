"""Closed-form boundary-layer correctors.

    theta_u   = A(t) exp(-r x / eps) + C(t)
    theta_psi = B(t) exp(-r x / eps) + D(t)

with coefficients chosen so that theta_u(0) = -u0(0, t), theta_psi(0) =
-psi0(0, t), theta_u(L) = 0, and so that the steady layer equations

    U0 theta_u_x + theta_psi_x - 2 eps theta_u_xx = 0
    U0 theta_psi_x + lambda^-2 theta_u_x = 0

hold identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .limit import BoundaryTrace
from .model import PhysParams, check_eps, r_rate

EXP_CLAMP = 700.0


def decay_factor(r: float, L: float, eps: float) -> float:
    """E = exp(-r L / eps), set to exactly 0 once the exponent passes 700."""
    z = r * L / eps
    return 0.0 if z > EXP_CLAMP else math.exp(-z)


@dataclass(frozen=True)
class CorrectorCoeffs:
    """Time samples of A, B, C, D and the constants they depend on."""

    times: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: float
    r: float
    eps: float
    params: PhysParams

    @property
    def k(self) -> float:
        """Inverse layer width r / eps."""
        return self.r / self.eps

    def __len__(self):
        return self.times.size

    def profile(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(-self.k * x)

    def perturbed(self, **deltas) -> "CorrectorCoeffs":
        """Copy with coefficient arrays shifted, e.g. ``perturbed(B=1e-3)``."""
        kw = {name: getattr(self, name) + deltas.get(name, 0.0) for name in "ABCD"}
        return CorrectorCoeffs(self.times, E=self.E, r=self.r, eps=self.eps, params=self.params, **kw)


def corrector_coeffs(params: PhysParams, eps: float, trace: BoundaryTrace) -> CorrectorCoeffs:
    eps = check_eps(eps)
    r = r_rate(params)
    E = decay_factor(r, params.L, eps)
    if not 0.0 <= E < 1.0:
        raise RuntimeError(f"decay factor E={E} outside [0, 1)")
    a = params.U0 * params.lam**2
    w = np.asarray(trace.u, dtype=float) / (1.0 - E)
    return CorrectorCoeffs(
        times=np.asarray(trace.times, dtype=float),
        A=-w,
        B=w / a,
        C=E * w,
        D=-E * w / a,
        E=E,
        r=r,
        eps=eps,
        params=params,
    )


def _check_x(coeffs, x):
    x = np.asarray(x, dtype=float)
    L = coeffs.params.L
    if np.any(x < 0) or np.any(x > L * (1 + 1e-14)):
        raise ValueError(f"x must lie in [0, {L}]")
    return x


def corrector_eval(coeffs: CorrectorCoeffs, x, t_index: int):
    """``(theta_u, theta_psi)`` at ``x`` for time sample ``t_index``."""
    x = _check_x(coeffs, x)
    e = coeffs.profile(x)
    j = t_index
    return coeffs.A[j] * e + coeffs.C[j], coeffs.B[j] * e + coeffs.D[j]


def corrector_fields(coeffs: CorrectorCoeffs, x) -> tuple[np.ndarray, np.ndarray]:
    """Corrector on nodes ``x`` at every time sample, shape ``(n_times, n_x)``."""
    x = _check_x(coeffs, x)
    e = coeffs.profile(x)[None, :]
    tu = coeffs.A[:, None] * e + coeffs.C[:, None]
    tp = coeffs.B[:, None] * e + coeffs.D[:, None]
    return tu, tp


def corrector_derivatives(coeffs: CorrectorCoeffs, x, t_index: int):
    """Exact ``(theta_u_x, theta_psi_x, theta_u_xx)``."""
    x = _check_x(coeffs, x)
    k = coeffs.k
    e = coeffs.profile(x)
    A, B = coeffs.A[t_index], coeffs.B[t_index]
    return -k * A * e, -k * B * e, k * k * A * e


def _time_derivative(values, times):
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise ValueError("time differentiation needs at least 3 samples")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("time samples must be uniformly spaced")
    return np.gradient(values, dt[0], edge_order=2)


@dataclass(frozen=True)
class CorrectorRates:
    """Time derivatives of the coefficients, sampled like the coefficients."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray


def coefficient_rates(coeffs: CorrectorCoeffs) -> CorrectorRates:
    """dA/dt ... dD/dt by second-order differences (one-sided at the ends)."""
    return CorrectorRates(*(_time_derivative(getattr(coeffs, n), coeffs.times) for n in "ABCD"))


def corrector_time_derivatives(coeffs: CorrectorCoeffs, x):
    """Time-derivative fields and the forcing remainder F on nodes ``x``.

    Returns
    -------
    dict
        ``theta_u_t``, ``theta_psi_t``, ``theta_psi_tx`` and ``F``, each of
        shape ``(n_times, n_x)``, with
        ``F = -theta_u_t + lambda theta_psi_t - 2 eps lambda^2 theta_psi_tx``.
    """
    x = _check_x(coeffs, x)
    rates = coefficient_rates(coeffs)
    e = coeffs.profile(x)[None, :]
    ut = rates.A[:, None] * e + rates.C[:, None]
    pt = rates.B[:, None] * e + rates.D[:, None]
    ptx = -coeffs.k * rates.B[:, None] * e
    lam, eps = coeffs.params.lam, coeffs.eps
    F = -ut + lam * pt - 2.0 * eps * lam**2 * ptx
    return {"theta_u_t": ut, "theta_psi_t": pt, "theta_psi_tx": ptx, "F": F}


def verification_nodes(coeffs: CorrectorCoeffs, n: int = 2001) -> np.ndarray:
    """Nodes resolving the layer: dense in [0, 40 eps/r] plus a uniform cover of [0, L]."""
    L = coeffs.params.L
    layer = np.linspace(0.0, min(L, 40.0 / coeffs.k), n)
    return np.union1d(layer, np.linspace(0.0, L, n))


def corrector_residuals(coeffs: CorrectorCoeffs, x=None) -> tuple[float, float]:
    """Sup over nodes and time samples of the two steady-layer residuals."""
    if x is None:
        x = verification_nodes(coeffs)
    x = _check_x(coeffs, x)
    U0, lam, eps, k = coeffs.params.U0, coeffs.params.lam, coeffs.eps, coeffs.k
    e = coeffs.profile(x)[None, :]
    A = coeffs.A[:, None]
    B = coeffs.B[:, None]
    tux, tpx, tuxx = -k * A * e, -k * B * e, k * k * A * e
    R1 = np.max(np.abs(U0 * tux + tpx - 2.0 * eps * tuxx))
    R2 = np.max(np.abs(U0 * tpx + tux / lam**2))
    return float(R1), float(R2)


def residual_bound(coeffs: CorrectorCoeffs) -> float:
    """Round-off allowance 1e-10 * max(1, |A| r / eps) for the residual identities."""
    return 1e-10 * max(1.0, float(np.max(np.abs(coeffs.A), initial=0.0)) * coeffs.k)


def boundary_identity_errors(coeffs: CorrectorCoeffs, trace: BoundaryTrace) -> np.ndarray:
    """Relative errors of theta_u(0) = -u0(0), theta_psi(0) = -psi0(0), theta_u(L) = 0."""
    L = coeffs.params.L
    tu0 = coeffs.A + coeffs.C
    tp0 = coeffs.B + coeffs.D
    tuL = coeffs.A * coeffs.profile(L) + coeffs.C
    return np.array(
        [
            np.max(np.abs(tu0 + trace.u) / (1 + np.abs(trace.u))),
            np.max(np.abs(tp0 + trace.psi) / (1 + np.abs(trace.u))),
            np.max(np.abs(tuL) / (1 + np.abs(trace.u))),
        ]
    )


# --- exact spatial norms -------------------------------------------------------


def moment(n: int, k: float, L: float) -> float:
    """Integral of x^n exp(-k x) over [0, L], for k >= 0."""
    if k == 0:
        return L ** (n + 1) / (n + 1)
    return math.factorial(n) / k ** (n + 1) * float(gammainc(n + 1, k * L))


def exp_affine_norm(a, c, k: float, L: float, weight_power: int = 0) -> np.ndarray:
    """L2(0, L) norm of x^m (a exp(-k x) + c), elementwise over arrays a, c."""
    m2 = 2 * weight_power
    sq = (
        np.square(a) * moment(m2, 2 * k, L)
        + 2 * np.asarray(a) * np.asarray(c) * moment(m2, k, L)
        + np.square(c) * moment(m2, 0.0, L)
    )
    return np.sqrt(np.maximum(sq, 0.0))


NORM_COLUMNS = (
    "theta_u",
    "theta_psi",
    "theta_u_t",
    "theta_psi_t",
    "theta_u_tx",
    "theta_psi_tx",
    "x_theta_u_t",
    "x_theta_psi_t",
    "x_eps_theta_u_tx",
    "x_eps_theta_psi_tx",
)

# expected eps exponent of each column, None where only boundedness is claimed
NORM_ORDERS = {
    "theta_u": 0.5,
    "theta_psi": 0.5,
    "theta_u_t": 0.5,
    "theta_psi_t": 0.5,
    "theta_u_tx": None,
    "theta_psi_tx": None,
    "x_theta_u_t": 1.5,
    "x_theta_psi_t": 1.5,
    "x_eps_theta_u_tx": 1.5,
    "x_eps_theta_psi_tx": 1.5,
}


def corrector_norms(coeffs: CorrectorCoeffs) -> dict[str, float]:
    """Sup-in-time L2(0, L) norms of the corrector family for one eps."""
    L, k, eps = coeffs.params.L, coeffs.k, coeffs.eps
    d = coefficient_rates(coeffs)
    zero = np.zeros_like(coeffs.A)
    parts = {
        "theta_u": (coeffs.A, coeffs.C, 0),
        "theta_psi": (coeffs.B, coeffs.D, 0),
        "theta_u_t": (d.A, d.C, 0),
        "theta_psi_t": (d.B, d.D, 0),
        "theta_u_tx": (-k * d.A, zero, 0),
        "theta_psi_tx": (-k * d.B, zero, 0),
        "x_theta_u_t": (d.A, d.C, 1),
        "x_theta_psi_t": (d.B, d.D, 1),
        "x_eps_theta_u_tx": (-eps * k * d.A, zero, 1),
        "x_eps_theta_psi_tx": (-eps * k * d.B, zero, 1),
    }
    return {name: float(np.max(exp_affine_norm(a, c, k, L, m))) for name, (a, c, m) in parts.items()}


def corrector_norm_table(params: PhysParams, eps_list, trace: BoundaryTrace) -> list[dict]:
    """One row of :func:`corrector_norms` per eps, with ``eps`` as first key."""
    eps_list = list(eps_list)
    if not eps_list:
        raise ValueError("eps_list is empty")
    rows = []
    for eps in eps_list:
        norms = corrector_norms(corrector_coeffs(params, eps, trace))
        rows.append({"eps": float(eps), **norms})
    return rows
