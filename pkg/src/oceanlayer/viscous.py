"""Theta-scheme finite differences for the viscous system.

Unknowns are interleaved as (u_0, psi_0, u_1, psi_1, ...), so every
stencil used here stays inside a band of two block rows on either side of
the diagonal.  The operator has constant coefficients, so the implicit
matrix is factored once and reused for every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .limit import checkpoint_steps
from .model import (
    Grid,
    PhysParams,
    ProblemData,
    SpaceTimeField,
    characteristic_speeds,
    check_eps,
)

ADVECTION = ("upwind", "central", "upwind2")


@dataclass(frozen=True)
class ViscousScheme:
    """Time weighting and advection stencil.

    ``theta`` is 0.5 for Crank-Nicolson and 1 for backward Euler.
    ``advection`` selects the stencil for U0 u_x and U0 psi_x:

    * ``"upwind"``: first-order backward differences for both;
    * ``"central"``: centred U0 u_x, first-order upwind U0 psi_x;
    * ``"upwind2"``: second-order backward differences for both (centred
      at the first interior node), and a second-order one-sided u_x in the
      outflow row of the psi equation.
    """

    theta: float = 1.0
    advection: str = "upwind"

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0.5, 1], got {self.theta}")
        if self.advection not in ADVECTION:
            raise ValueError(f"advection must be one of {ADVECTION}, got {self.advection!r}")


# --- nonuniform stencils ------------------------------------------------------
# Each helper returns, for target rows ``i``, the column offsets and weights
# of a derivative approximation at x_i.


def _central_d1(x, i):
    hm = x[i] - x[i - 1]
    hp = x[i + 1] - x[i]
    return (-1, 0, 1), (
        -hp / (hm * (hm + hp)),
        (hp - hm) / (hm * hp),
        hm / (hp * (hm + hp)),
    )


def _central_d2(x, i):
    hm = x[i] - x[i - 1]
    hp = x[i + 1] - x[i]
    return (-1, 0, 1), (
        2.0 / (hm * (hm + hp)),
        -2.0 / (hm * hp),
        2.0 / (hp * (hm + hp)),
    )


def _backward1(x, i):
    h = x[i] - x[i - 1]
    return (-1, 0), (-1.0 / h, 1.0 / h)


def _backward2(x, i):
    h1 = x[i] - x[i - 1]
    h2 = x[i - 1] - x[i - 2]
    return (-2, -1, 0), (
        h1 / (h2 * (h1 + h2)),
        -(h1 + h2) / (h1 * h2),
        (2 * h1 + h2) / (h1 * (h1 + h2)),
    )


class _Assembler:
    def __init__(self, n):
        self.n = n
        self.rows, self.cols, self.vals = [], [], []

    def add(self, row_var, col_var, i, stencil, scale):
        """Add ``scale * stencil`` acting on variable ``col_var`` to rows of ``row_var``."""
        offsets, weights = stencil
        i = np.asarray(i)
        for off, w in zip(offsets, weights):
            self.rows.append(2 * i + row_var)
            self.cols.append(2 * (i + off) + col_var)
            self.vals.append(scale * np.broadcast_to(w, i.shape))

    def matrix(self):
        if not self.rows:
            return sp.csr_matrix((self.n, self.n))
        r = np.concatenate(self.rows)
        c = np.concatenate(self.cols)
        v = np.concatenate(self.vals)
        return sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))


U, PSI = 0, 1


def spatial_operator(params: PhysParams, eps: float, x: np.ndarray, advection: str) -> sp.csr_matrix:
    """Matrix M with du/dt = -M y + source on the interior rows.

    Rows of the constrained unknowns u_0, u_N, psi_0 are left empty.
    """
    N = x.size - 1
    if N < 3:
        raise ValueError("the viscous stencil needs at least 4 nodes")
    U0, lam = params.U0, params.lam
    asm = _Assembler(2 * (N + 1))
    iu = np.arange(1, N)  # u rows
    ip = np.arange(1, N + 1)  # psi rows

    # u equation: U0 u_x + psi_x - 2 eps u_xx
    if advection == "upwind":
        asm.add(U, U, iu, _backward1(x, iu), U0)
    elif advection == "central":
        asm.add(U, U, iu, _central_d1(x, iu), U0)
    else:
        asm.add(U, U, iu[:1], _central_d1(x, iu[:1]), U0)
        asm.add(U, U, iu[1:], _backward2(x, iu[1:]), U0)
    asm.add(U, PSI, iu, _central_d1(x, iu), 1.0)
    asm.add(U, U, iu, _central_d2(x, iu), -2.0 * eps)

    # psi equation: U0 psi_x + lambda^-2 u_x
    inner = ip[:-1]
    if advection == "upwind2":
        asm.add(PSI, PSI, ip[:1], _central_d1(x, ip[:1]), U0)
        asm.add(PSI, PSI, ip[1:], _backward2(x, ip[1:]), U0)
        asm.add(PSI, U, np.array([N]), _backward2(x, np.array([N])), lam**-2)
    else:
        asm.add(PSI, PSI, ip, _backward1(x, ip), U0)
        asm.add(PSI, U, np.array([N]), _backward1(x, np.array([N])), lam**-2)
    asm.add(PSI, U, inner, _central_d1(x, inner), lam**-2)
    return asm.matrix()


def constrained_rows(n_nodes: int) -> np.ndarray:
    """Indices of u_0, psi_0 and u_N in the interleaved vector."""
    N = n_nodes - 1
    return np.array([2 * 0 + U, 2 * 0 + PSI, 2 * N + U])


def _source(data, x, t):
    f, g = data.sample(x, t)
    s = np.empty(2 * x.size)
    s[U::2] = f
    s[PSI::2] = g
    s[constrained_rows(x.size)] = 0.0
    return s


@dataclass(frozen=True, eq=False)
class ViscousSolution:
    u: SpaceTimeField
    psi: SpaceTimeField
    grid: Grid
    params: PhysParams
    eps: float
    scheme: ViscousScheme
    history: np.ndarray | None = field(default=None, repr=False)

    def dump_rows(self, k: int):
        """(x, u, psi) rows of checkpoint ``k``."""
        return np.column_stack([self.grid.nodes, self.u[k], self.psi[k]])


def cfl_limit(params: PhysParams, grid: Grid, scheme: ViscousScheme) -> float | None:
    """Largest admissible dt, or None if the scheme has no advective limit."""
    if scheme.theta < 1.0 and scheme.advection == "upwind":
        c_plus, _ = characteristic_speeds(params)
        return 0.9 * grid.min_dx / c_plus
    return None


def solve_viscous(
    params: PhysParams,
    eps: float,
    grid: Grid,
    data: ProblemData,
    scheme: ViscousScheme | None = None,
    checkpoints=11,
    retain_history: bool = False,
) -> ViscousSolution:
    """March the viscous system from t = 0 to T with the theta scheme.

    Parameters
    ----------
    params, eps : physical constants and viscosity.
    grid : Grid
        Nodes and time step.
    data : ProblemData
    scheme : ViscousScheme, optional
        Defaults to backward Euler with first-order upwinding.
    checkpoints : int or sequence of float
        Either a count of evenly spaced checkpoints (including 0 and T) or
        explicit times, each a multiple of ``grid.dt``.
    retain_history : bool
        Keep every time level, needed by :func:`discrete_residual_viscous`.

    Returns
    -------
    ViscousSolution
        Boundary nodes u(0), u(L), psi(0) are exactly zero at every level
        except possibly t = 0, where the initial data are stored as given.
    """
    eps = check_eps(eps)
    scheme = scheme or ViscousScheme()
    max_dt = cfl_limit(params, grid, scheme)
    if max_dt is not None and grid.dt > max_dt * (1 + 1e-12):
        raise ValueError(f"CFL violation: dt={grid.dt:.3e} exceeds {max_dt:.3e}")
    x = grid.nodes
    n = 2 * x.size
    dt, th = grid.dt, scheme.theta
    M = spatial_operator(params, eps, x, scheme.advection)
    eye = sp.identity(n, format="csr")
    A = (eye + th * dt * M).tolil()
    B = (eye - (1.0 - th) * dt * M).tolil()
    fixed = constrained_rows(x.size)
    for r in fixed:
        A.rows[r] = [r]
        A.data[r] = [1.0]
        B.rows[r] = []
        B.data[r] = []
    A = A.tocsc()
    B = B.tocsr()
    try:
        lu = splu(A, permc_spec="NATURAL")
    except RuntimeError as exc:
        raise ValueError(f"singular implicit matrix: {exc}") from exc

    steps = checkpoint_steps(grid, checkpoints)
    want = set(steps.tolist())
    u0, p0 = data.initial(x)
    y = np.empty(n)
    y[U::2] = u0
    y[PSI::2] = p0
    hist = np.empty((grid.n_steps + 1, n)) if retain_history else None
    snaps = {}
    if 0 in want:
        snaps[0] = y.copy()
    if hist is not None:
        hist[0] = y
    s_old = _source(data, x, 0.0)
    for k in range(grid.n_steps):
        s_new = _source(data, x, (k + 1) * dt)
        rhs = B @ y + dt * (th * s_new + (1.0 - th) * s_old)
        rhs[fixed] = 0.0
        y = lu.solve(rhs)
        if not np.all(np.isfinite(y)):
            raise ValueError(f"viscous solve produced non-finite values at step {k + 1}")
        y[fixed] = 0.0
        s_old = s_new
        if k + 1 in want:
            snaps[k + 1] = y.copy()
        if hist is not None:
            hist[k + 1] = y

    times = steps * dt
    Y = np.array([snaps[s] for s in steps])
    return ViscousSolution(
        SpaceTimeField(grid, times, Y[:, U::2]),
        SpaceTimeField(grid, times, Y[:, PSI::2]),
        grid,
        params,
        eps,
        scheme,
        hist,
    )


def discrete_residual_viscous(sol: ViscousSolution, data: ProblemData) -> float:
    """Max interior residual of the retained history in the scheme's own stencil."""
    if sol.history is None:
        raise ValueError("solution was computed without retain_history=True")
    x = sol.grid.nodes
    dt, th = sol.grid.dt, sol.scheme.theta
    M = spatial_operator(sol.params, sol.eps, x, sol.scheme.advection)
    free = np.ones(2 * x.size, dtype=bool)
    free[constrained_rows(x.size)] = False
    H = sol.history
    worst = 0.0
    s_old = _source(data, x, 0.0)
    for k in range(H.shape[0] - 1):
        s_new = _source(data, x, (k + 1) * dt)
        res = (H[k + 1] - H[k]) / dt + M @ (th * H[k + 1] + (1 - th) * H[k])
        res -= th * s_new + (1 - th) * s_old
        worst = max(worst, float(np.max(np.abs(res[free]))))
        s_old = s_new
    return worst
