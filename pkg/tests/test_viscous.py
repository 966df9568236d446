import dataclasses

import numpy as np
import pytest

from oceanlayer.analysis import norm_L2
from oceanlayer.model import ProblemData, default_scenario, make_grid, zero_scenario
from oceanlayer.verification import mms_forcing_viscous, polynomial_exact
from oceanlayer.viscous import (
    ViscousScheme,
    cfl_limit,
    constrained_rows,
    discrete_residual_viscous,
    solve_viscous,
)

SCHEMES = [ViscousScheme(1.0, "upwind"), ViscousScheme(0.5, "central"), ViscousScheme(0.5, "upwind2")]


def smooth_data():
    return ProblemData(
        u0=lambda x: np.sin(np.pi * x) ** 2,
        psi0=lambda x: x**2 * (1 - x),
        f=lambda x, t: np.cos(3 * x) * (1 + t),
        g=lambda x, t: np.sin(2 * x + t),
    )


def test_scheme_validation():
    with pytest.raises(ValueError):
        ViscousScheme(theta=0.3)
    with pytest.raises(ValueError):
        ViscousScheme(advection="weno")


def test_zero_data(params):
    grid = make_grid(params, 40)
    sol = solve_viscous(params, 0.05, grid, zero_scenario())
    assert np.all(sol.u.values == 0) and np.all(sol.psi.values == 0)


@pytest.mark.parametrize("scheme", SCHEMES, ids=lambda s: f"{s.theta}-{s.advection}")
def test_boundary_rows_exact(params, scheme):
    grid = make_grid(params, 60, dt=0.01)
    if cfl_limit(params, grid, scheme):
        grid = grid.with_dt(cfl_limit(params, grid, scheme))
    sol = solve_viscous(params, 0.02, grid, default_scenario(params), scheme)
    assert np.all(sol.u.values[:, 0] == 0.0)
    assert np.all(sol.u.values[:, -1] == 0.0)
    assert np.all(sol.psi.values[:, 0] == 0.0)
    assert sol.dump_rows(3).shape == (grid.n_nodes, 3)


def test_cfl_enforced_for_explicit_upwind(params):
    grid = make_grid(params, 100, dt=0.05)
    with pytest.raises(ValueError, match="CFL"):
        solve_viscous(params, 0.1, grid, zero_scenario(), ViscousScheme(0.5, "upwind"))
    # backward Euler has no advective limit
    solve_viscous(params, 0.1, grid, zero_scenario(), ViscousScheme(1.0, "upwind"))


@pytest.mark.parametrize("scheme", SCHEMES, ids=lambda s: f"{s.theta}-{s.advection}")
def test_residual_of_own_stencil(params, scheme):
    data = smooth_data()
    grid = make_grid(params, 50, dt=0.01)
    if cfl_limit(params, grid, scheme):
        grid = grid.with_dt(cfl_limit(params, grid, scheme))
    sol = solve_viscous(params, 0.01, grid, data, scheme, retain_history=True)
    scale = max(np.abs(sol.history).max(), 1.0) / grid.dt
    assert discrete_residual_viscous(sol, data) <= 1e-9 * scale

    hist = sol.history.copy()
    hist[7, 2 * 20] += 1e-3
    bad = dataclasses.replace(sol, history=hist)
    assert discrete_residual_viscous(bad, data) >= 1e-4


def test_residual_needs_history(params):
    sol = solve_viscous(params, 0.1, make_grid(params, 10), zero_scenario())
    with pytest.raises(ValueError):
        discrete_residual_viscous(sol, zero_scenario())


def test_residual_of_zero_solution_is_forcing(params):
    data = ProblemData(f=lambda x, t: np.sin(np.pi * x) * (1 + t))
    grid = make_grid(params, 20, dt=0.1)
    sol = solve_viscous(params, 0.1, grid, zero_scenario(), retain_history=True)
    x = grid.nodes
    free = np.ones(x.size, dtype=bool)
    free[[0, -1]] = False
    expected = max(np.abs(data.f(x[free], t)).max() for t in grid.times[1:])
    assert discrete_residual_viscous(sol, data) == pytest.approx(expected, rel=1e-14)


def test_mms_spatial_order(params):
    exact = polynomial_exact(params.L)
    data = mms_forcing_viscous(exact, params, 0.1)
    errs = []
    for n in (32, 64, 128):
        grid = make_grid(params, n, dt=1.0 / n, multiple_of=4)
        sol = solve_viscous(params, 0.1, grid, data, checkpoints=5)
        x = grid.nodes
        errs.append(max(np.abs(sol.u[-1] - exact.u(x, 1.0)).max(), np.abs(sol.psi[-1] - exact.psi(x, 1.0)).max()))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 0.9), orders


def test_self_convergence(params):
    data = default_scenario(params)
    sols = []
    for n in (50, 100, 200):
        grid = make_grid(params, n, dt=1.0 / n, multiple_of=10)
        sols.append(solve_viscous(params, 0.1, grid, data))
    d1 = max(norm_L2(a - b[::2], sols[0].grid) for a, b in zip(sols[0].u.values, sols[1].u.values))
    d2 = max(norm_L2(a - b[::2], sols[1].grid) for a, b in zip(sols[1].u.values, sols[2].u.values))
    assert d1 / d2 >= 1.8


def test_energy_nonincreasing_backward_euler(params):
    data = ProblemData(u0=lambda x: np.sin(np.pi * x) + np.sin(4 * np.pi * x), psi0=lambda x: x * np.cos(2 * x))
    grid = make_grid(params, 80, dt=0.02)
    sol = solve_viscous(params, 0.01, grid, data, ViscousScheme(1.0, "upwind"), checkpoints=51)
    x = grid.nodes
    energy = [np.trapezoid(u**2 + params.lam**2 * p**2, x) for u, p in zip(sol.u.values[1:], sol.psi.values[1:])]
    assert np.all(np.diff(energy) <= 1e-14)


@pytest.mark.parametrize("scheme", SCHEMES, ids=lambda s: f"{s.theta}-{s.advection}")
def test_linearity(params, scheme):
    d1 = smooth_data()
    d2 = default_scenario(params)
    grid = make_grid(params, 40, dt=0.01)
    if cfl_limit(params, grid, scheme):
        grid = grid.with_dt(cfl_limit(params, grid, scheme))
    s1 = solve_viscous(params, 0.03, grid, d1, scheme)
    s2 = solve_viscous(params, 0.03, grid, d2, scheme)
    s12 = solve_viscous(params, 0.03, grid, d1 + d2, scheme)
    scale = np.abs(s12.u.values).max()
    np.testing.assert_allclose(s12.u.values, s1.u.values + s2.u.values, atol=1e-10 * scale)
    np.testing.assert_allclose(s12.psi.values, s1.psi.values + s2.psi.values, atol=1e-10 * scale)


def test_constrained_rows():
    np.testing.assert_array_equal(constrained_rows(5), [0, 1, 8])
