"""Solver for the inviscid (eps = 0) system.

Writing v+ = u + lambda psi and v- = u - lambda psi diagonalizes the
system into two transport equations

    v+_t + c+ v+_x = f + lambda g,     c+ = U0 + 1/lambda > 0
    v-_t + c- v-_x = f - lambda g,     c- = U0 - 1/lambda < 0

so v+ enters at x = 0 and v- enters at x = L.  The boundary conditions
u + U0 lambda^2 psi = 0 (x = 0) and u = 0 (x = L) become reflections of
the outgoing invariant into the incoming one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Grid,
    PhysParams,
    ProblemData,
    SpaceTimeField,
    characteristic_speeds,
)


def to_riemann(u, psi, lam):
    u = np.asarray(u, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if u.shape != psi.shape:
        raise ValueError("u and psi must have matching shapes")
    return u + lam * psi, u - lam * psi


def from_riemann(v_plus, v_minus, lam):
    v_plus = np.asarray(v_plus, dtype=float)
    v_minus = np.asarray(v_minus, dtype=float)
    if v_plus.shape != v_minus.shape:
        raise ValueError("v_plus and v_minus must have matching shapes")
    return 0.5 * (v_plus + v_minus), (v_plus - v_minus) / (2.0 * lam)


def boundary_closure(params: PhysParams) -> tuple[float, float]:
    """Reflection coefficients ``(rho_left, rho_right)``.

    At x = 0 the incoming invariant is ``v+ = rho_left * v-``; at x = L it
    is ``v- = rho_right * v+``.
    """
    a = params.U0 * params.lam
    return -(1.0 - a) / (1.0 + a), -1.0


@dataclass(frozen=True)
class BoundaryTrace:
    """Samples of u0(0, t) and psi0(0, t)."""

    times: np.ndarray
    u: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        u = np.asarray(self.u, dtype=float)
        p = np.asarray(self.psi, dtype=float)
        if t.ndim != 1 or t.size == 0 or u.shape != t.shape or p.shape != t.shape:
            raise ValueError("trace arrays must be nonempty and share one shape")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "psi", p)

    def __len__(self):
        return self.times.size

    @classmethod
    def from_u(cls, params: PhysParams, times, u) -> "BoundaryTrace":
        """Trace from u0(0, t) alone, using psi0(0, t) = -u0(0, t) / (U0 lambda^2)."""
        u = np.asarray(u, dtype=float)
        return cls(times, u, -u / (params.U0 * params.lam**2))

    @classmethod
    def analytic(cls, params: PhysParams, func, times) -> "BoundaryTrace":
        times = np.asarray(times, dtype=float)
        return cls.from_u(params, times, np.broadcast_to(func(times), times.shape))

    def closure_residual(self, params: PhysParams) -> float:
        """Max of |u + U0 lambda^2 psi| / (1 + |u|) over the samples."""
        res = np.abs(self.u + params.U0 * params.lam**2 * self.psi)
        return float(np.max(res / (1.0 + np.abs(self.u))))

    def at(self, times) -> "BoundaryTrace":
        """Samples at a subset of the stored times (matched to 1e-9)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        idx = np.searchsorted(self.times, times - 1e-9)
        idx = np.clip(idx, 0, self.times.size - 1)
        if np.any(np.abs(self.times[idx] - times) > 1e-9):
            raise ValueError("requested times are not trace samples")
        return BoundaryTrace(self.times[idx], self.u[idx], self.psi[idx])


@dataclass(frozen=True)
class LimitSolution:
    u: SpaceTimeField
    psi: SpaceTimeField
    trace: BoundaryTrace
    params: PhysParams

    @property
    def grid(self) -> Grid:
        return self.u.grid


def checkpoint_steps(grid: Grid, checkpoints) -> np.ndarray:
    """Map a checkpoint request (an int count or a list of times) to step indices."""
    if np.isscalar(checkpoints):
        n = int(checkpoints)
        if n < 2:
            raise ValueError("need at least 2 checkpoints (t = 0 and t = T)")
        times = np.linspace(0.0, grid.T, n)
    else:
        times = np.asarray(checkpoints, dtype=float)
    steps = np.rint(times / grid.dt).astype(int)
    if np.any(np.abs(steps * grid.dt - times) > 1e-9 * max(1.0, grid.T)):
        raise ValueError(f"checkpoint times {times} are not multiples of dt={grid.dt}")
    if np.any(steps < 0) or np.any(steps > grid.n_steps):
        raise ValueError("checkpoint outside [0, T]")
    return steps


def solve_limit(
    params: PhysParams,
    grid: Grid,
    data: ProblemData,
    cfl: float = 0.9,
    checkpoints=11,
) -> LimitSolution:
    """First-order upwind transport of the two Riemann invariants.

    Each invariant is upwinded along its own characteristic direction with
    explicit Euler time stepping; sources are sampled at the old time level.
    The boundary trace is recorded at every time step.
    """
    if not 0 < cfl <= 1:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    c_plus, c_minus = characteristic_speeds(params)
    dt = grid.dt
    limit_dt = cfl * grid.min_dx / max(c_plus, -c_minus)
    if dt > limit_dt * (1 + 1e-12):
        raise ValueError(f"CFL violation: dt={dt:.3e} exceeds {limit_dt:.3e}")
    rho_left, rho_right = boundary_closure(params)
    lam = params.lam
    x = grid.nodes
    h = grid.spacing
    steps = checkpoint_steps(grid, checkpoints)

    u, psi = data.initial(x)
    vp, vm = to_riemann(u, psi, lam)
    vp[0] = rho_left * vm[0]
    vm[-1] = rho_right * vp[-1]

    nu_p = c_plus * dt / h  # acts on nodes 1..N
    nu_m = -c_minus * dt / h  # acts on nodes 0..N-1

    trace_u = np.empty(grid.n_steps + 1)
    trace_p = np.empty(grid.n_steps + 1)
    snaps = {}
    want = set(steps.tolist())

    def record(n):
        uu, pp = from_riemann(vp, vm, lam)
        trace_u[n], trace_p[n] = uu[0], pp[0]
        if n in want:
            snaps[n] = (uu, pp)

    record(0)
    for n in range(grid.n_steps):
        f, g = data.sample(x, n * dt)
        sp = f + lam * g
        sm = f - lam * g
        new_p = vp.copy()
        new_m = vm.copy()
        new_p[1:] = vp[1:] - nu_p * (vp[1:] - vp[:-1]) + dt * sp[1:]
        new_m[:-1] = vm[:-1] + nu_m * (vm[1:] - vm[:-1]) + dt * sm[:-1]
        new_p[0] = rho_left * new_m[0]
        new_m[-1] = rho_right * new_p[-1]
        vp, vm = new_p, new_m
        record(n + 1)

    times = steps * dt
    U = np.array([snaps[s][0] for s in steps])
    P = np.array([snaps[s][1] for s in steps])
    trace = BoundaryTrace(grid.times, trace_u, trace_p)
    return LimitSolution(
        SpaceTimeField(grid, times, U), SpaceTimeField(grid, times, P), trace, params
    )


def trace_export(sol: LimitSolution) -> BoundaryTrace:
    return sol.trace


# --- characteristic evaluation ------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _line_integral(x_start, t_start, speed, t_end, lam_sign, lam, data):
    """Integral of f + lam_sign*lam*g along x = x_start + speed (tau - t_start)."""
    span = t_end - t_start
    total = np.zeros_like(span)
    mask = span > 0
    if not np.any(mask):
        return total
    half = 0.5 * span[mask]
    mid = t_start[mask] + half
    acc = np.zeros_like(half)
    for node, w in zip(_GL_NODES, _GL_WEIGHTS):
        tau = mid + half * node
        xx = x_start[mask] + speed * (tau - t_start[mask])
        acc += w * (data.f(xx, tau) + lam_sign * lam * data.g(xx, tau))
    total[mask] = half * acc
    return total


def characteristic_solution(params: PhysParams, data: ProblemData, x, t):
    """Limit solution (u0, psi0) at points (x, t) by tracing characteristics.

    Each invariant is followed backwards until it meets t = 0 or its inflow
    boundary, where the reflection rule hands over to the other invariant.
    Source integrals use 24-point Gauss-Legendre quadrature, so for smooth
    forcing the result is accurate to near round-off.  Independent of any
    grid; used as an exact reference for the upwind scheme.
    """
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    shape = x.shape
    x = x.ravel().copy()
    t = t.ravel().copy()
    vp = _v_plus(params, data, x, t)
    vm = _v_minus(params, data, x, t)
    u, psi = from_riemann(vp, vm, params.lam)
    return u.reshape(shape), psi.reshape(shape)


def _v_plus(params, data, x, t):
    c, _ = characteristic_speeds(params)
    rho_left, _ = boundary_closure(params)
    lam = params.lam
    out = np.empty_like(x)
    t_foot = t - x / c
    from_init = t_foot <= 0
    if np.any(from_init):
        xi, ti = x[from_init], t[from_init]
        x0 = xi - c * ti
        u0, p0 = data.initial(x0)
        out[from_init] = (u0 + lam * p0) + _line_integral(
            x0, np.zeros_like(ti), c, ti, +1, lam, data
        )
    rest = ~from_init
    if np.any(rest):
        tb = t_foot[rest]
        inflow = rho_left * _v_minus(params, data, np.zeros_like(tb), tb)
        out[rest] = inflow + _line_integral(np.zeros_like(tb), tb, c, t[rest], +1, lam, data)
    return out


def _v_minus(params, data, x, t):
    _, c = characteristic_speeds(params)
    _, rho_right = boundary_closure(params)
    lam, L = params.lam, params.L
    out = np.empty_like(x)
    t_foot = t - (L - x) / (-c)
    from_init = t_foot <= 0
    if np.any(from_init):
        xi, ti = x[from_init], t[from_init]
        x0 = xi - c * ti
        u0, p0 = data.initial(x0)
        out[from_init] = (u0 - lam * p0) + _line_integral(
            x0, np.zeros_like(ti), c, ti, -1, lam, data
        )
    rest = ~from_init
    if np.any(rest):
        tb = t_foot[rest]
        inflow = rho_right * _v_plus(params, data, np.full_like(tb, L), tb)
        out[rest] = inflow + _line_integral(
            np.full_like(tb, L), tb, c, t[rest], -1, lam, data
        )
    return out


def characteristic_limit(
    params: PhysParams, grid: Grid, data: ProblemData, checkpoints=11
) -> LimitSolution:
    """Limit solution sampled on ``grid`` by :func:`characteristic_solution`.

    The trace is recorded at every step of ``grid``.
    """
    steps = checkpoint_steps(grid, checkpoints)
    times = steps * grid.dt
    x = grid.nodes
    X, Tm = np.meshgrid(x, times)
    u, psi = characteristic_solution(params, data, X, Tm)
    tt = grid.times
    tu, tp = characteristic_solution(params, data, np.zeros_like(tt), tt)
    return LimitSolution(
        SpaceTimeField(grid, times, u),
        SpaceTimeField(grid, times, psi),
        BoundaryTrace(tt, tu, tp),
        params,
    )
