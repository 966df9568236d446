import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oceanlayer.analysis import (
    DifferenceFields,
    ThicknessSpec,
    derivative,
    difference_fields,
    energy_ratio,
    energy_terms,
    fit_rate,
    gradient_norm,
    hardy_check,
    norm_L2,
    norm_Linf,
    norm_weighted_x,
    seminorm_H1,
    sup_over_time,
    thickness_probe,
    w_field,
)
from oceanlayer.corrector import corrector_coeffs
from oceanlayer.limit import BoundaryTrace
from oceanlayer.model import Grid, PhysParams, SpaceTimeField, make_grid

X = np.linspace(0.0, 1.0, 2001)


def stf(grid, times, values):
    return SpaceTimeField(grid, np.asarray(times, float), np.asarray(values, float))


def test_norm_examples():
    one = np.ones_like(X)
    assert norm_L2(one, X) == pytest.approx(1.0, rel=1e-14)
    assert norm_Linf(one) == 1.0
    assert norm_L2(X, X) == pytest.approx(1 / math.sqrt(3), abs=1e-6)
    assert norm_weighted_x(one, X) == pytest.approx(1 / math.sqrt(3), abs=1e-6)
    assert seminorm_H1(X, X) == pytest.approx(1.0, rel=1e-12)
    zero = np.zeros_like(X)
    assert norm_L2(zero, X) == norm_Linf(zero) == norm_weighted_x(zero, X) == seminorm_H1(zero, X) == 0.0


def test_norm_length_mismatch():
    with pytest.raises(ValueError):
        norm_L2(np.ones(5), X)


def test_norms_on_nonuniform_grid():
    x = np.sort(np.concatenate([[0.0, 1.0], np.random.default_rng(1).uniform(0, 1, 3000)]))
    assert norm_L2(x, x) == pytest.approx(1 / math.sqrt(3), abs=1e-5)
    # trapezoid is exact for the linear field's derivative
    assert seminorm_H1(3 * x, x) == pytest.approx(3.0, rel=1e-12)


@settings(max_examples=50)
@given(st.floats(1e-6, 1e3), st.sampled_from([-1.0, 1.0]), st.integers(0, 2**31 - 1))
def test_norm_homogeneity(mag, sign, seed):
    c = sign * mag
    f = np.random.default_rng(seed).normal(size=X.size)
    for norm in (lambda v: norm_L2(v, X), norm_Linf, lambda v: norm_weighted_x(v, X), lambda v: seminorm_H1(v, X)):
        assert norm(c * f) == pytest.approx(abs(c) * norm(f), rel=1e-12, abs=1e-300)


def test_sup_over_time():
    grid = Grid(X, 0.1, 10)
    t = np.linspace(0, 1, 6)
    field = stf(grid, t, np.outer(t, np.sin(np.pi * X)))
    assert sup_over_time(field, norm_L2) == pytest.approx(norm_L2(field[-1], X))
    single = stf(grid, [0.3], [np.cos(X)])
    assert sup_over_time(single, norm_L2) == norm_L2(np.cos(X), X)
    assert sup_over_time(single, norm_Linf) == 1.0
    assert sup_over_time(stf(grid, t, np.zeros((6, X.size))), norm_L2) == 0.0


def test_derivative_stencil():
    x = np.array([0.0, 0.1, 0.3, 0.6, 1.0])
    np.testing.assert_allclose(derivative(x**2, x)[1:-1], 2 * x[1:-1], rtol=1e-12)
    np.testing.assert_allclose(derivative(5 * x, x), 5.0)


def test_w_field_examples():
    grid = Grid(X, 0.1, 10)
    t = [0.0, 1.0]
    zero = stf(grid, t, np.zeros((2, X.size)))
    psi = stf(grid, t, np.tile(X, (2, 1)))
    W = w_field(zero, psi, 0.1, 1.0)
    np.testing.assert_allclose(W.values, np.tile(-X + 0.2, (2, 1)), atol=1e-12)
    W0 = w_field(psi, psi, 0.0, 1.0)
    assert np.all(W0.values == 0)
    const = stf(grid, t, np.full((2, X.size), 3.0))
    half = stf(grid, t, np.full((2, X.size), 1.5))
    assert np.all(w_field(const, half, 0.2, 2.0).values == 0)


def test_hardy_examples():
    lhs, rhs, ok = hardy_check(X, X)
    assert (lhs, rhs, ok) == (pytest.approx(1.0, rel=1e-12), pytest.approx(4.0, rel=1e-12), True)
    lhs, rhs, ok = hardy_check(X * (1 - X), X)
    assert lhs == pytest.approx(1 / 3, abs=1e-6)
    assert rhs == pytest.approx(4 / 3, abs=1e-6)
    assert ok
    assert tuple(hardy_check(np.zeros_like(X), X)) == (0.0, 0.0, True)


def test_hardy_requires_zero_at_origin():
    with pytest.raises(ValueError):
        hardy_check(X + 1, X)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.integers(0, 2**31 - 1))
def test_hardy_holds_on_graded_grids(coef, seed):
    params = PhysParams()
    rng = np.random.default_rng(seed)
    grid = make_grid(params, 200, *_grading(rng))
    x = grid.nodes
    f = sum(c * np.sin((k + 1) * np.pi * x / 2) for k, c in enumerate(coef))
    assert hardy_check(f, grid).ok


def _grading(rng):
    from oceanlayer.model import GradingSpec

    return (GradingSpec.geometric(10 ** rng.uniform(-5, -2), rng.uniform(1.01, 1.3)),)


def _fake_solution(grid, times, u, psi):
    return SimpleNamespace(u=stf(grid, times, u), psi=stf(grid, times, psi))


def test_difference_fields_zero_trace(params):
    grid = make_grid(params, 50)
    t = np.linspace(0, 1, 3)
    vals = np.outer(t, np.sin(np.pi * grid.nodes))
    sol = _fake_solution(grid, t, vals, 2 * vals)
    trace = BoundaryTrace.analytic(params, np.zeros_like, np.linspace(0, 1, 11))
    diff = difference_fields(sol, sol, corrector_coeffs(params, 0.01, trace))
    assert np.all(diff.U.values == 0) and np.all(diff.Psi.values == 0)


def test_difference_fields_boundary_telescoping(params):
    # viscous satisfies the Dirichlet rows, limit carries the trace
    grid = make_grid(params, 50)
    t = np.linspace(0, 1, 6)
    x = grid.nodes
    a = np.sin(t)
    lim_u = np.outer(a, 1 - x)
    lim_p = -lim_u / (params.U0 * params.lam**2)
    visc_u = np.outer(t, x * (1 - x))
    visc_p = np.outer(t, x)
    lim = _fake_solution(grid, t, lim_u, lim_p)
    visc = _fake_solution(grid, t, visc_u, visc_p)
    trace = BoundaryTrace.analytic(params, np.sin, np.linspace(0, 1, 101))
    diff = difference_fields(visc, lim, corrector_coeffs(params, 0.01, trace))
    assert diff.boundary_residual() <= 1e-12


def test_difference_fields_grid_mismatch(params):
    g1, g2 = make_grid(params, 10), make_grid(params, 12)
    t = [0.0, 1.0]
    a = _fake_solution(g1, t, np.zeros((2, 11)), np.zeros((2, 11)))
    b = _fake_solution(g2, t, np.zeros((2, 13)), np.zeros((2, 13)))
    trace = BoundaryTrace.analytic(params, np.zeros_like, np.array([0.0, 0.5, 1.0]))
    with pytest.raises(ValueError):
        difference_fields(a, b, corrector_coeffs(params, 0.1, trace))


def _synthetic_diff(eps, s, x, times):
    grid = Grid(x, times[1] - times[0], len(times) - 1)
    U = stf(grid, times, np.tile(eps * s, (len(times), 1)))
    P = stf(grid, times, np.zeros((len(times), x.size)))
    return DifferenceFields(U, P)


def test_energy_zero():
    d = _synthetic_diff(0.1, np.zeros_like(X), X, np.linspace(0, 1, 5))
    assert energy_ratio(d, 0.1, 1.0) == 0.0
    assert gradient_norm(d, 0.1) == 0.0


def test_energy_ratio_synthetic_closed_form():
    # U = eps s, Psi = 0 gives W = U, so the ratio is 2|s|^2 + eps T |s_x|^2
    s = np.sin(np.pi * X)
    times = np.linspace(0, 1, 5)
    l2 = norm_L2(s, X) ** 2
    h1 = seminorm_H1(s, X) ** 2
    ratios = []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        d = _synthetic_diff(eps, s, X, times)
        got = energy_ratio(d, eps, 1.0)
        assert got == pytest.approx(2 * l2 + eps * 1.0 * h1, rel=1e-12)
        level, dissip = energy_terms(d, eps, 1.0)
        assert level == pytest.approx(2 * eps**2 * l2, rel=1e-12)
        ratios.append(got)
    assert max(ratios) / min(ratios) < 1 + 0.1 * h1 / (2 * l2)


def test_fit_rate_examples():
    eps = 0.1 * 2.0 ** -np.arange(6)
    rep = fit_rate(eps, 3 * eps)
    assert rep.slope == pytest.approx(1.0, abs=1e-12)
    assert rep.r_squared == pytest.approx(1.0, abs=1e-12)
    assert rep.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit_rate(eps, 2 * np.sqrt(eps)).slope == pytest.approx(0.5, abs=1e-12)
    wiggle = eps * (1 + 0.05 * (-1.0) ** np.arange(6))
    assert 0.93 <= fit_rate(eps, wiggle).slope <= 1.07


def test_fit_rate_errors():
    with pytest.raises(ValueError):
        fit_rate([0.1, 0.01], [1.0, 2.0])
    with pytest.raises(ValueError):
        fit_rate([0.1, 0.01, 0.001], [1.0, 0.0, 2.0])
    with pytest.raises(ValueError):
        fit_rate([0.1, -0.01, 0.001], [1.0, 1.0, 2.0])


@given(
    st.lists(st.floats(1e-6, 1.0), min_size=3, max_size=10, unique=True),
    st.floats(-3, 3),
    st.floats(1e-3, 1e3),
)
def test_fit_rate_exact_power_law(eps, p, c):
    eps = np.array(eps)
    if np.ptp(np.log(eps)) < 1e-3:
        return
    rep = fit_rate(eps, c * eps**p)
    assert rep.slope == pytest.approx(p, abs=1e-9)


def test_thickness_spec():
    assert ThicknessSpec("vanishing").delta(0.01) == pytest.approx(0.01 * math.log(100))
    assert ThicknessSpec("proportional", 2.0).delta(0.01) == 0.02
    with pytest.raises(ValueError):
        ThicknessSpec("wide")
    with pytest.raises(ValueError):
        ThicknessSpec("proportional", 0.0)


def _layer_family(params, eps_list, amp):
    r = params.r
    times = np.linspace(0, 1, 11)
    a = amp(times)
    fam = []
    for eps in eps_list:
        x = np.union1d(np.linspace(0, 1, 4001), [eps * math.log(1 / eps), eps])
        grid = Grid(x, 0.1, 10)
        lim_u = np.tile(a[:, None], (1, x.size)) * (1 - x)[None, :]
        visc_u = lim_u - a[:, None] * np.exp(-r * x / eps)[None, :]
        lim = _fake_solution(grid, times, lim_u, np.zeros_like(lim_u))
        visc = _fake_solution(grid, times, visc_u, np.zeros_like(lim_u))
        fam.append((eps, visc, lim))
    return fam


def test_thickness_synthetic_layer(params):
    eps_list = [1e-2, 1e-3, 1e-4]
    fam = _layer_family(params, eps_list, np.sin)
    sup_a = np.sin(1.0)
    van = thickness_probe(fam, ThicknessSpec("vanishing"))
    for row, eps in zip(van.rows, eps_list):
        assert row.outer_sup == pytest.approx(sup_a * eps**params.r, rel=1e-12)
        assert row.inner_sup == pytest.approx(sup_a, rel=1e-12)
    assert van.outer_decreasing and not van.degenerate
    prop = thickness_probe(fam, ThicknessSpec("proportional", 1.0))
    assert prop.min_inner_fraction == pytest.approx(1.0)
    assert len(prop.as_rows()) == 3


def test_thickness_degenerate(params):
    fam = _layer_family(params, [1e-2, 1e-3], np.zeros_like)
    rep = thickness_probe(fam, ThicknessSpec("proportional"))
    assert rep.degenerate
    assert all(row.inner_sup == 0 for row in rep.rows)


def test_thickness_delta_outside_domain(params):
    fam = _layer_family(params, [1e-2], np.sin)
    with pytest.raises(ValueError):
        thickness_probe(fam, ThicknessSpec("proportional", 1000.0))
