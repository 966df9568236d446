"""Physical parameters, grids, field containers and problem data.

The viscous system on (0, L) x (0, T) is

    u_t + U0 u_x + psi_x - 2 eps u_xx = f
    psi_t + U0 psi_x + lambda^-2 u_x = g

with u(0) = u(L) = psi(0) = 0, and its eps = 0 limit carries the coupled
left condition u + U0 lambda^2 psi = 0 together with u(L) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Field = np.ndarray
"""Nodal values at one time level, one entry per grid node."""


@dataclass(frozen=True)
class PhysParams:
    """Constant coefficients and domain of the ocean-related system.

    Attributes
    ----------
    U0 : float
        Background advection speed, ``0 < U0 < 1/lambda``.
    lam : float
        Wave-stiffness parameter lambda.
    L : float
        Domain length.
    T : float
        Final time.
    """

    U0: float = 0.5
    lam: float = 1.0
    L: float = 1.0
    T: float = 1.0

    def __post_init__(self):
        for name in ("U0", "lam", "L", "T"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if self.U0 * self.lam >= 1.0:
            raise ValueError(
                f"r nonpositive: need U0*lambda < 1, got {self.U0 * self.lam:g}"
            )

    @property
    def r(self) -> float:
        return r_rate(self)


def check_eps(eps: float) -> float:
    """Validate a viscosity value and return it as a float."""
    eps = float(eps)
    if not (math.isfinite(eps) and eps > 0):
        raise ValueError(f"eps must be positive, got {eps!r}")
    return eps


def r_rate(params: PhysParams) -> float:
    """Decay rate of the boundary-layer profile exp(-r x / eps)."""
    U0, lam = params.U0, params.lam
    r = 1.0 / (2.0 * U0 * lam**2) - U0 / 2.0
    if not r > 0:
        raise ValueError(f"r nonpositive ({r:g}); need U0*lambda < 1")
    return r


def characteristic_speeds(params: PhysParams) -> tuple[float, float]:
    """Speeds U0 +/- 1/lambda of the Riemann invariants u +/- lambda psi."""
    return params.U0 + 1.0 / params.lam, params.U0 - 1.0 / params.lam


@dataclass(frozen=True)
class GradingSpec:
    """Node distribution rule.

    ``kind="uniform"`` ignores the other fields.  ``kind="geometric"``
    starts with spacing ``min_dx`` at x = 0 and multiplies it by ``ratio``
    until it reaches the cap ``L / n_cells``.
    """

    kind: str = "uniform"
    ratio: float = 1.1
    min_dx: float | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "geometric"):
            raise ValueError(f"unknown grading kind {self.kind!r}")
        if self.kind == "geometric":
            if not (1.0 < self.ratio <= 2.0):
                raise ValueError(f"geometric ratio must lie in (1, 2], got {self.ratio}")
            if self.min_dx is None or self.min_dx <= 0:
                raise ValueError("geometric grading needs a positive min_dx")

    @classmethod
    def geometric(cls, min_dx: float, ratio: float = 1.1) -> "GradingSpec":
        return cls("geometric", ratio, min_dx)


@dataclass(frozen=True, eq=False)
class Grid:
    """Spatial nodes on [0, L] plus a uniform time step."""

    nodes: np.ndarray
    dt: float
    n_steps: int

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        if x.ndim != 1 or x.size < 3:
            raise ValueError("a grid needs at least 3 nodes")
        if x[0] != 0.0:
            raise ValueError("first node must be 0")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    @property
    def L(self) -> float:
        return float(self.nodes[-1])

    @property
    def T(self) -> float:
        return self.dt * self.n_steps

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def min_dx(self) -> float:
        return float(self.spacing.min())

    @property
    def max_dx(self) -> float:
        return float(self.spacing.max())

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def with_dt(self, dt: float, multiple_of: int = 1) -> "Grid":
        """Same nodes, new time step no larger than ``dt``.

        The step count is rounded up to a multiple of ``multiple_of`` so that
        evenly spaced checkpoints fall on time levels.
        """
        return Grid(self.nodes, *_time_steps(self.T, dt, multiple_of))

    def same_nodes(self, other: "Grid") -> bool:
        return self.nodes.shape == other.nodes.shape and bool(
            np.all(self.nodes == other.nodes)
        )


def _time_steps(T: float, dt: float, multiple_of: int = 1) -> tuple[float, int]:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n = max(1, math.ceil(T / dt - 1e-9))
    n = multiple_of * math.ceil(n / multiple_of)
    return T / n, n


def geometric_nodes(L: float, min_dx: float, ratio: float, cap: float) -> np.ndarray:
    nodes = [0.0]
    h = min(min_dx, cap)
    while nodes[-1] + h < L * (1 - 1e-12):
        nodes.append(nodes[-1] + h)
        h = min(h * ratio, cap)
    # avoid a sliver cell next to x = L
    if len(nodes) > 1 and L - nodes[-1] < 0.25 * min(h, nodes[-1] - nodes[-2]):
        nodes.pop()
    nodes.append(L)
    return np.array(nodes)


def make_grid(
    params: PhysParams,
    n_cells: int,
    grading: GradingSpec | None = None,
    dt: float | None = None,
    multiple_of: int = 1,
) -> Grid:
    """Build a spatial grid on [0, L] and a time step dividing T.

    Parameters
    ----------
    params : PhysParams
    n_cells : int
        Number of cells for uniform grading; for geometric grading it only
        sets the spacing cap ``L / n_cells``.
    grading : GradingSpec, optional
        Defaults to uniform.
    dt : float, optional
        Requested time step; rounded down so that an integer number of
        steps reaches T.  Defaults to ``T / n_cells``.
    multiple_of : int
        Force the step count to be a multiple of this.
    """
    grading = grading or GradingSpec()
    if n_cells < 2:
        raise ValueError(f"n_cells must be >= 2, got {n_cells}")
    L = params.L
    if grading.kind == "uniform":
        nodes = np.linspace(0.0, L, n_cells + 1)
    else:
        if grading.min_dx >= L:
            raise ValueError(f"min_dx={grading.min_dx} must be smaller than L={L}")
        nodes = geometric_nodes(L, grading.min_dx, grading.ratio, L / n_cells)
    if dt is None:
        dt = params.T / n_cells
    return Grid(nodes, *_time_steps(params.T, dt, multiple_of))


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Checkpointed nodal values: ``values[k]`` is the field at ``times[k]``."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape != (t.size, self.grid.n_nodes):
            raise ValueError(
                f"values shape {v.shape} does not match ({t.size}, {self.grid.n_nodes})"
            )
        if np.any(np.diff(t) < 0):
            raise ValueError("checkpoint times must be nondecreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    def __getitem__(self, k) -> Field:
        return self.values[k]

    def snapshots(self):
        return list(zip(self.times, self.values))

    def __sub__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        _check_compatible(self, other)
        return SpaceTimeField(self.grid, self.times, self.values - other.values)

    def __add__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        _check_compatible(self, other)
        return SpaceTimeField(self.grid, self.times, self.values + other.values)

    def scaled(self, c: float) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.times, c * self.values)


def _check_compatible(a: SpaceTimeField, b: SpaceTimeField):
    if not a.grid.same_nodes(b.grid):
        raise ValueError("fields live on different grids")
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise ValueError("fields have different checkpoint times")


def _zero_x(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _zero_xt(x, t):
    return np.zeros_like(np.asarray(x, dtype=float)) + 0.0 * t


@dataclass(frozen=True)
class ProblemData:
    """Initial data u0(x), psi0(x) and forcings f(x, t), g(x, t).

    All four callables must accept numpy arrays for ``x`` and a scalar or
    broadcastable array for ``t``.
    """

    u0: Callable = _zero_x
    psi0: Callable = _zero_x
    f: Callable = _zero_xt
    g: Callable = _zero_xt
    name: str = field(default="custom", compare=False)

    def __add__(self, other: "ProblemData") -> "ProblemData":
        a, b = self, other
        return ProblemData(
            u0=lambda x: a.u0(x) + b.u0(x),
            psi0=lambda x: a.psi0(x) + b.psi0(x),
            f=lambda x, t: a.f(x, t) + b.f(x, t),
            g=lambda x, t: a.g(x, t) + b.g(x, t),
            name=f"{a.name}+{b.name}",
        )

    def sample(self, x: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Forcing values on the nodes ``x`` at time ``t``; rejects non-finite output."""
        x = np.asarray(x, dtype=float)
        fx = np.broadcast_to(np.asarray(self.f(x, t), dtype=float), x.shape)
        gx = np.broadcast_to(np.asarray(self.g(x, t), dtype=float), x.shape)
        if not (np.all(np.isfinite(fx)) and np.all(np.isfinite(gx))):
            raise ValueError(f"forcing is not finite at t={t}")
        return fx, gx

    def initial(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        u = np.broadcast_to(np.asarray(self.u0(x), dtype=float), x.shape).copy()
        p = np.broadcast_to(np.asarray(self.psi0(x), dtype=float), x.shape).copy()
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(p))):
            raise ValueError("initial data is not finite")
        return u, p


def zero_scenario() -> ProblemData:
    return ProblemData(name="zero")


def default_scenario(params: PhysParams) -> ProblemData:
    """Zero initial data, f = sin(pi x/L) sin t, g = (1 - cos t) cos(pi x/L).

    Every compatibility condition at t = 0 holds trivially and the limit
    trace u0(0, t) is nonzero for t > 0.
    """
    k = np.pi / params.L
    return ProblemData(
        f=lambda x, t: np.sin(k * x) * np.sin(t),
        g=lambda x, t: (1.0 - np.cos(t)) * np.cos(k * x),
        name="default",
    )


def broken_scenario(params: PhysParams) -> ProblemData:
    """Default forcing with u0 = x (L - x); violates u0_xx(0) = 0."""
    base = default_scenario(params)
    L = params.L
    return ProblemData(u0=lambda x: x * (L - x), psi0=base.psi0, f=base.f, g=base.g, name="broken")


SCENARIOS = {
    "default": default_scenario,
    "zero": lambda params: zero_scenario(),
    "broken": broken_scenario,
}


def scenario(name: str, params: PhysParams) -> ProblemData:
    try:
        return SCENARIOS[name](params)
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
