"""Norms, difference fields, energy diagnostics, rate fits and layer probes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corrector import CorrectorCoeffs, corrector_fields
from .model import Grid, SpaceTimeField, check_eps

# --- spatial norms --------------------------------------------------------------


def _nodes(grid) -> np.ndarray:
    return grid.nodes if isinstance(grid, Grid) else np.asarray(grid, dtype=float)


def _check(field, x):
    field = np.asarray(field, dtype=float)
    if field.shape[-1] != x.size:
        raise ValueError(f"field has {field.shape[-1]} values, grid has {x.size} nodes")
    return field


def norm_L2(field, grid) -> float:
    """Trapezoidal L2 norm on a possibly nonuniform grid."""
    x = _nodes(grid)
    field = _check(field, x)
    return math.sqrt(float(np.trapezoid(field**2, x)))


def norm_Linf(field) -> float:
    return float(np.max(np.abs(field), initial=0.0))


def norm_weighted_x(field, grid) -> float:
    """Trapezoidal L2 norm of x * field."""
    x = _nodes(grid)
    field = _check(field, x)
    return norm_L2(x * field, x)


def seminorm_H1(field, grid) -> float:
    """L2 norm of the cellwise difference quotient (exact for the linear interpolant)."""
    x = _nodes(grid)
    field = _check(field, x)
    return math.sqrt(float(np.sum(np.diff(field) ** 2 / np.diff(x))))


def derivative(field, grid) -> np.ndarray:
    """Centred nonuniform differences inside, first-order one-sided at the ends."""
    x = _nodes(grid)
    field = _check(field, x)
    h = np.diff(x)
    d = np.diff(field, axis=-1) / h
    out = np.empty_like(field)
    hm, hp = h[:-1], h[1:]
    # weighted mean of the neighbouring slopes; exact on quadratics and constants
    out[..., 1:-1] = (hp * d[..., :-1] + hm * d[..., 1:]) / (hm + hp)
    out[..., 0] = d[..., 0]
    out[..., -1] = d[..., -1]
    return out


def sup_over_time(stf: SpaceTimeField, norm) -> float:
    """Max over checkpoints of ``norm(values, grid)`` (or ``norm(values)``)."""
    if len(stf) < 1:
        raise ValueError("no checkpoints")
    try:
        vals = [norm(v, stf.grid) for v in stf.values]
    except TypeError:
        vals = [norm(v) for v in stf.values]
    return float(max(vals))


# --- difference fields ------------------------------------------------------------


@dataclass(frozen=True)
class DifferenceFields:
    """U = u_eps - u0 - theta_u and Psi = psi_eps - psi0 - theta_psi."""

    U: SpaceTimeField
    Psi: SpaceTimeField

    @property
    def grid(self) -> Grid:
        return self.U.grid

    def boundary_residual(self) -> float:
        """Largest of |U(0)|, |U(L)|, |Psi(0)| over checkpoints."""
        return float(
            max(
                np.max(np.abs(self.U.values[:, 0])),
                np.max(np.abs(self.U.values[:, -1])),
                np.max(np.abs(self.Psi.values[:, 0])),
            )
        )


def _coeff_rows(coeffs: CorrectorCoeffs, times) -> np.ndarray:
    idx = np.searchsorted(coeffs.times, times - 1e-9)
    idx = np.clip(idx, 0, coeffs.times.size - 1)
    if np.any(np.abs(coeffs.times[idx] - times) > 1e-9):
        raise ValueError("corrector is not sampled at the checkpoint times")
    return idx


def difference_fields(viscous, limit, coeffs: CorrectorCoeffs) -> DifferenceFields:
    """Nodewise U, Psi from a viscous solve, a limit solve and the corrector.

    The corrector may be sampled more densely than the checkpoints; the
    samples at checkpoint times are used.
    """
    gv, gl = viscous.u.grid, limit.u.grid
    if not gv.same_nodes(gl):
        raise ValueError("viscous and limit solutions live on different grids")
    times = viscous.u.times
    if times.shape != limit.u.times.shape or np.any(np.abs(times - limit.u.times) > 1e-9):
        raise ValueError("viscous and limit checkpoints differ")
    tu, tp = corrector_fields(coeffs, gv.nodes)
    rows = _coeff_rows(coeffs, times)
    U = viscous.u.values - limit.u.values - tu[rows]
    P = viscous.psi.values - limit.psi.values - tp[rows]
    return DifferenceFields(SpaceTimeField(gv, times, U), SpaceTimeField(gv, times, P))


def w_field(U: SpaceTimeField, Psi: SpaceTimeField, eps: float, lam: float) -> SpaceTimeField:
    """W = U - lambda Psi + 2 eps lambda^2 Psi_x at each checkpoint."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = U.grid.nodes
    W = U.values - lam * Psi.values + 2.0 * eps * lam**2 * derivative(Psi.values, x)
    return SpaceTimeField(U.grid, U.times, W)


# --- Hardy inequality ---------------------------------------------------------------


@dataclass(frozen=True)
class HardyResult:
    lhs: float
    rhs: float
    ok: bool

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.ok))


def hardy_check(field, grid, atol: float = 1e-9) -> HardyResult:
    """Discrete check of  int field^2/x^2 dx <= 4 int field_x^2 dx.

    The left side is trapezoidal with the x = 0 integrand replaced by its
    limit (field_x(0))^2; the right side uses cellwise difference quotients.
    """
    x = _nodes(grid)
    field = _check(field, x)
    scale = 1.0 + float(np.max(np.abs(field)))
    if abs(field[0]) > atol * scale:
        raise ValueError(f"hardy_check needs field(0) = 0, got {field[0]:.3e}")
    integrand = np.empty_like(field)
    integrand[1:] = (field[1:] / x[1:]) ** 2
    integrand[0] = ((field[1] - field[0]) / (x[1] - x[0])) ** 2
    lhs = float(np.trapezoid(integrand, x))
    rhs = 4.0 * seminorm_H1(field, x) ** 2
    return HardyResult(lhs, rhs, lhs <= rhs * (1 + 1e-6))


# --- energy ----------------------------------------------------------------------------


def energy_terms(diff: DifferenceFields, eps: float, lam: float) -> tuple[float, float]:
    """(sup_t int (W^2 + U^2 + Psi^2) dx,  eps int_0^T int (Psi_x^2 + U_x^2) dx dt)."""
    eps = check_eps(eps)
    x = diff.grid.nodes
    W = w_field(diff.U, diff.Psi, eps, lam)
    pointwise = W.values**2 + diff.U.values**2 + diff.Psi.values**2
    level = float(np.max(np.trapezoid(pointwise, x, axis=1)))
    dx = np.diff(x)
    grad = np.sum(np.diff(diff.U.values, axis=1) ** 2 / dx, axis=1) + np.sum(
        np.diff(diff.Psi.values, axis=1) ** 2 / dx, axis=1
    )
    times = diff.U.times
    dissip = eps * float(np.trapezoid(grad, times)) if times.size > 1 else 0.0
    return level, dissip


def energy_ratio(diff: DifferenceFields, eps: float, lam: float) -> float:
    """Energy left side normalized by eps^2; bounded in eps if the estimate is sharp."""
    level, dissip = energy_terms(diff, eps, lam)
    return (level + dissip) / eps**2


def gradient_norm(diff: DifferenceFields, eps: float) -> float:
    """eps^1/2 * ||(U_x, Psi_x)||_{L2((0,L)x(0,T))}, time integral by trapezoid over checkpoints."""
    x = diff.grid.nodes
    dx = np.diff(x)
    grad = np.sum(np.diff(diff.U.values, axis=1) ** 2 / dx, axis=1) + np.sum(
        np.diff(diff.Psi.values, axis=1) ** 2 / dx, axis=1
    )
    return math.sqrt(eps * float(np.trapezoid(grad, diff.U.times)))


# --- rates ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateReport:
    """Least-squares fit of ln(error) = slope * ln(eps) + intercept."""

    eps: tuple
    errors: tuple
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return {
            "eps": list(self.eps),
            "errors": list(self.errors),
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
        }


def fit_rate(eps, errors) -> RateReport:
    e = np.asarray(eps, dtype=float)
    y = np.asarray(errors, dtype=float)
    if e.shape != y.shape or e.size < 3:
        raise ValueError("need at least 3 (eps, error) pairs")
    if np.any(e <= 0) or np.any(y <= 0):
        raise ValueError("rate fit needs strictly positive eps and errors")
    lx, ly = np.log(e), np.log(y)
    xm, ym = lx.mean(), ly.mean()
    sxx = np.sum((lx - xm) ** 2)
    if sxx == 0:
        raise ValueError("eps values must not all coincide")
    slope = float(np.sum((lx - xm) * (ly - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = ly - (slope * lx + intercept)
    syy = np.sum((ly - ym) ** 2)
    r2 = 1.0 if syy == 0 else float(1.0 - np.sum(resid**2) / syy)
    return RateReport(tuple(e.tolist()), tuple(y.tolist()), slope, intercept, r2)


# --- layer thickness -------------------------------------------------------------------


@dataclass(frozen=True)
class ThicknessSpec:
    """Probe width: ``eps*ln(1/eps)`` ("vanishing") or ``c*eps`` ("proportional")."""

    mode: str = "vanishing"
    c: float = 1.0

    def __post_init__(self):
        if self.mode not in ("vanishing", "proportional"):
            raise ValueError(f"unknown thickness mode {self.mode!r}")
        if not self.c > 0:
            raise ValueError("c must be positive")

    def delta(self, eps: float) -> float:
        if self.mode == "vanishing":
            return eps * math.log(1.0 / eps)
        return self.c * eps


@dataclass(frozen=True)
class ThicknessRow:
    eps: float
    delta: float
    outer_u: float
    outer_psi: float
    inner_u: float
    inner_psi: float
    trace_sup: float

    @property
    def outer_sup(self) -> float:
        return max(self.outer_u, self.outer_psi)

    @property
    def inner_sup(self) -> float:
        return max(self.inner_u, self.inner_psi)

    @property
    def inner_fraction(self) -> float:
        """inner |u_eps - u0| relative to sup_t |u0(0, t)| (nan when the trace vanishes)."""
        return self.inner_u / self.trace_sup if self.trace_sup > 0 else math.nan


@dataclass(frozen=True)
class ThicknessReport:
    spec: ThicknessSpec
    rows: tuple

    @property
    def degenerate(self) -> bool:
        """True when the limit trace vanishes and no layer can form."""
        return all(row.trace_sup <= 1e-14 for row in self.rows)

    @property
    def outer_decreasing(self) -> bool:
        outer = [row.outer_sup for row in self.rows]
        return all(b < a for a, b in zip(outer, outer[1:]))

    @property
    def outer_reduction(self) -> float:
        """Final outer_sup over the first one."""
        first = self.rows[0].outer_sup
        return self.rows[-1].outer_sup / first if first > 0 else math.nan

    @property
    def min_inner_fraction(self) -> float:
        return min(row.inner_fraction for row in self.rows)

    def as_rows(self) -> list[dict]:
        return [
            {
                "eps": r.eps,
                "delta": r.delta,
                "outer_u": r.outer_u,
                "outer_psi": r.outer_psi,
                "outer_sup": r.outer_sup,
                "inner_u": r.inner_u,
                "inner_psi": r.inner_psi,
                "inner_sup": r.inner_sup,
                "trace_sup": r.trace_sup,
                "inner_fraction": r.inner_fraction,
            }
            for r in self.rows
        ]


def thickness_probe(family, spec: ThicknessSpec) -> ThicknessReport:
    """Sup of |u_eps - u0| and |psi_eps - psi0| inside and outside [0, delta(eps)].

    Parameters
    ----------
    family : iterable of (eps, viscous, limit)
        ``viscous`` and ``limit`` expose ``u`` and ``psi`` SpaceTimeFields on
        one grid with matching checkpoints.
    spec : ThicknessSpec
    """
    rows = []
    for eps, visc, lim in family:
        x = visc.u.grid.nodes
        delta = spec.delta(eps)
        if not 0 < delta < x[-1]:
            raise ValueError(f"delta={delta:g} for eps={eps:g} is outside (0, L)")
        du = np.abs(visc.u.values - lim.u.values)
        dp = np.abs(visc.psi.values - lim.psi.values)
        outer = x >= delta
        inner = x <= delta
        rows.append(
            ThicknessRow(
                eps=float(eps),
                delta=delta,
                outer_u=float(du[:, outer].max()),
                outer_psi=float(dp[:, outer].max()),
                inner_u=float(du[:, inner].max()),
                inner_psi=float(dp[:, inner].max()),
                trace_sup=float(np.max(np.abs(lim.u.values[:, 0]))),
            )
        )
    return ThicknessReport(spec, tuple(rows))
