"""Manufactured solutions and the t = 0 compatibility checker."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import PhysParams, ProblemData


@dataclass(frozen=True)
class ExactSolution:
    """Exact pair (u*, psi*) with hand-coded partial derivatives.

    Every callable takes ``(x, t)`` with numpy broadcasting.
    """

    u: Callable
    u_t: Callable
    u_x: Callable
    u_xx: Callable
    psi: Callable
    psi_t: Callable
    psi_x: Callable
    name: str = field(default="exact", compare=False)


def _zero(x, t):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape)


def zero_exact() -> ExactSolution:
    return ExactSolution(_zero, _zero, _zero, _zero, _zero, _zero, _zero, name="zero")


def polynomial_exact(L: float = 1.0) -> ExactSolution:
    """u* = psi* = t x (L - x)."""

    def val(x, t):
        return t * x * (L - x)

    def dt(x, t):
        return x * (L - x) + 0.0 * t

    def dx(x, t):
        return t * (L - 2 * x)

    def dxx(x, t):
        return -2.0 * t + 0.0 * x

    return ExactSolution(val, dt, dx, dxx, val, dt, dx, name="polynomial")


def trig_exact(L: float = 1.0) -> ExactSolution:
    """u* = sin(t) sin(pi x / L), psi* = sin(t) x (L - x) / L^2."""
    k = np.pi / L
    return ExactSolution(
        u=lambda x, t: np.sin(t) * np.sin(k * x),
        u_t=lambda x, t: np.cos(t) * np.sin(k * x),
        u_x=lambda x, t: k * np.sin(t) * np.cos(k * x),
        u_xx=lambda x, t: -k * k * np.sin(t) * np.sin(k * x),
        psi=lambda x, t: np.sin(t) * x * (L - x) / L**2,
        psi_t=lambda x, t: np.cos(t) * x * (L - x) / L**2,
        psi_x=lambda x, t: np.sin(t) * (L - 2 * x) / L**2,
        name="trig",
    )


EXACT_SOLUTIONS = {
    "polynomial": polynomial_exact,
    "trig": trig_exact,
    "zero": lambda L=1.0: zero_exact(),
}


def derivative_spot_check(exact: ExactSolution, L: float, T: float, h: float = 1e-4) -> float:
    """Largest mismatch between the coded derivatives and centred differences."""
    xs = np.linspace(0.1 * L, 0.9 * L, 7)
    ts = np.linspace(0.1 * T, 0.9 * T, 5)
    X, Tm = np.meshgrid(xs, ts)
    worst = 0.0
    pairs = [
        (exact.u_x, (exact.u(X + h, Tm) - exact.u(X - h, Tm)) / (2 * h)),
        (exact.u_t, (exact.u(X, Tm + h) - exact.u(X, Tm - h)) / (2 * h)),
        (exact.u_xx, (exact.u_x(X + h, Tm) - exact.u_x(X - h, Tm)) / (2 * h)),
        (exact.psi_x, (exact.psi(X + h, Tm) - exact.psi(X - h, Tm)) / (2 * h)),
        (exact.psi_t, (exact.psi(X, Tm + h) - exact.psi(X, Tm - h)) / (2 * h)),
    ]
    for coded, fd in pairs:
        worst = max(worst, float(np.max(np.abs(coded(X, Tm) - fd))))
    return worst


def _sample_times(params, n=11):
    return np.linspace(0.0, params.T, n)


def viscous_boundary_violation(exact: ExactSolution, params: PhysParams) -> float:
    t = _sample_times(params)
    z = np.zeros_like(t)
    return float(
        max(
            np.max(np.abs(exact.u(z, t))),
            np.max(np.abs(exact.u(z + params.L, t))),
            np.max(np.abs(exact.psi(z, t))),
        )
    )


def limit_boundary_violation(exact: ExactSolution, params: PhysParams) -> float:
    t = _sample_times(params)
    z = np.zeros_like(t)
    a = params.U0 * params.lam**2
    return float(
        max(
            np.max(np.abs(exact.u(z, t) + a * exact.psi(z, t))),
            np.max(np.abs(exact.u(z + params.L, t))),
        )
    )


def _forcing(exact, params, eps):
    U0, lam = params.U0, params.lam
    return ProblemData(
        u0=lambda x: exact.u(x, 0.0),
        psi0=lambda x: exact.psi(x, 0.0),
        f=lambda x, t: exact.u_t(x, t) + U0 * exact.u_x(x, t) + exact.psi_x(x, t) - 2.0 * eps * exact.u_xx(x, t),
        g=lambda x, t: exact.psi_t(x, t) + U0 * exact.psi_x(x, t) + exact.u_x(x, t) / lam**2,
        name=f"mms-{exact.name}",
    )


def mms_forcing_viscous(exact: ExactSolution, params: PhysParams, eps: float, tol: float = 1e-10) -> ProblemData:
    """Data for which ``exact`` solves the viscous problem.

    ``eps = 0`` is accepted and gives the limit-system forcing.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    bad = viscous_boundary_violation(exact, params)
    if bad > tol:
        raise ValueError(f"exact solution violates u(0)=u(L)=psi(0)=0 by {bad:.3e}")
    return _forcing(exact, params, eps)


def mms_forcing_limit(exact: ExactSolution, params: PhysParams, tol: float = 1e-10) -> ProblemData:
    bad = limit_boundary_violation(exact, params)
    if bad > tol:
        raise ValueError(f"exact solution violates u + U0 lambda^2 psi = 0 / u(L) = 0 by {bad:.3e}")
    return _forcing(exact, params, 0.0)


# --- compatibility ---------------------------------------------------------------------

# fourth-order one-sided stencils, nodes x0, x0 + h, ..., for d/dx and d2/dx2
_D1 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_D2 = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0


def endpoint_derivatives(func, x0: float, h: float, direction: int) -> tuple[float, float]:
    """(f'(x0), f''(x0)) from one-sided stencils; ``direction=-1`` looks left."""
    pts = x0 + direction * h * np.arange(6)
    vals = np.asarray(func(pts), dtype=float)
    if vals.shape != pts.shape or not np.all(np.isfinite(vals)):
        raise ValueError("data is not evaluable near the endpoint")
    d1 = direction * float(_D1 @ vals[:5]) / h
    d2 = float(_D2 @ vals) / h**2
    return d1, d2


CONDITIONS = (
    "u0_xx(0) = 0",
    "u0_xx(L) = 0",
    "U0 u0_x(0) + psi0_x(0) = f(0,0)",
    "U0 u0_x(L) + psi0_x(L) = f(L,0)",
    "U0 psi0_x(0) + u0_x(0)/lambda^2 = g(0,0)",
)

ASSUMED = (
    "(u0, psi0) in H^4 x H^3 and in D(A)",
    "(f_t, g_t) in L^1(0,T;H), continuous in H at t = 0",
    "(f_x, g_x) in L^inf(0,T;H)",
    "u0_xx, psi0_xx, f_t(.,0), g_t(.,0) in L^2",
)


@dataclass(frozen=True)
class CompatibilityReport:
    residuals: dict
    tol: float
    assumed: tuple = ASSUMED

    @property
    def passes(self) -> dict:
        return {name: bool(res <= self.tol) for name, res in self.residuals.items()}

    @property
    def ok(self) -> bool:
        return all(self.passes.values())

    def failures(self) -> dict:
        return {k: v for k, v in self.residuals.items() if v > self.tol}

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "ok": self.ok,
            "conditions": [
                {"condition": k, "residual": v, "pass": self.passes[k]} for k, v in self.residuals.items()
            ],
            "assumed": list(self.assumed),
        }

    def table(self) -> str:
        lines = [f"{'condition':52s} {'residual':>12s}  status"]
        for k, v in self.residuals.items():
            lines.append(f"{k:52s} {v:12.3e}  {'pass' if v <= self.tol else 'FAIL'}")
        for a in self.assumed:
            lines.append(f"{a:52s} {'-':>12s}  assumed")
        return "\n".join(lines)


def compatibility_check(data: ProblemData, params: PhysParams, tol: float = 1e-6) -> CompatibilityReport:
    """Residuals of the t = 0 corner conditions needed for the regularity class."""
    L, U0, lam = params.L, params.U0, params.lam
    h = 1e-4 * L
    u_x0, u_xx0 = endpoint_derivatives(data.u0, 0.0, h, +1)
    u_xL, u_xxL = endpoint_derivatives(data.u0, L, h, -1)
    p_x0, _ = endpoint_derivatives(data.psi0, 0.0, h, +1)
    p_xL, _ = endpoint_derivatives(data.psi0, L, h, -1)
    f0 = float(np.asarray(data.f(np.array([0.0]), 0.0)).ravel()[0])
    fL = float(np.asarray(data.f(np.array([L]), 0.0)).ravel()[0])
    g0 = float(np.asarray(data.g(np.array([0.0]), 0.0)).ravel()[0])
    values = [
        abs(u_xx0),
        abs(u_xxL),
        abs(U0 * u_x0 + p_x0 - f0),
        abs(U0 * u_xL + p_xL - fL),
        abs(U0 * p_x0 + u_x0 / lam**2 - g0),
    ]
    if not all(np.isfinite(values)):
        raise ValueError("compatibility residuals are not finite")
    return CompatibilityReport(dict(zip(CONDITIONS, values)), tol)
