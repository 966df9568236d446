"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 4 to 7 share one full default sweep (six eps values, each solved
at two resolutions), computed once per module.
"""

import math
import os
import time

import numpy as np
import pytest

from oceanlayer import harness
from oceanlayer.analysis import fit_rate
from oceanlayer.corrector import (
    boundary_identity_errors,
    corrector_coeffs,
    corrector_norm_table,
    corrector_residuals,
)
from oceanlayer.limit import BoundaryTrace
from oceanlayer.model import PhysParams, broken_scenario, default_scenario
from oceanlayer.verification import CONDITIONS, compatibility_check

pytestmark = pytest.mark.acceptance


def _random_triple(rng):
    U0 = rng.uniform(0.05, 3.0)
    lam = rng.uniform(0.02, 0.98) / U0
    p = PhysParams(U0=U0, lam=lam, L=rng.uniform(0.2, 5.0), T=rng.uniform(0.5, 2.0))
    eps = 10.0 ** rng.uniform(-5, 0)
    amp, freq, phase = rng.uniform(-10, 10), rng.uniform(0, 10), rng.uniform(0, 2 * np.pi)
    times = np.linspace(0.0, p.T, 51)
    trace = BoundaryTrace.analytic(p, lambda t: amp * np.sin(freq * t + phase), times)
    return p, eps, trace


def test_criterion_1_corrector_identities(criterion_line):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_res, worst_bc = 0.0, 0.0
    for _ in range(100):
        p, eps, trace = _random_triple(rng)
        c = corrector_coeffs(p, eps, trace)
        R1, R2 = corrector_residuals(c)
        bound = 1e-10 * max(1.0, float(np.max(np.abs(c.A))) * c.r / eps)
        worst_res = max(worst_res, R1 / bound, R2 / bound)
        worst_bc = max(worst_bc, float(np.max(boundary_identity_errors(c, trace))))
    elapsed = time.perf_counter() - start
    ok = worst_res <= 1.0 and worst_bc <= 1e-12 and elapsed < 1.0
    criterion_line(
        1, ok, f"max R/bound={worst_res:.2e}, max boundary err={worst_bc:.2e}, {elapsed:.2f}s"
    )
    assert worst_res <= 1.0
    assert worst_bc <= 1e-12
    assert elapsed < 1.0


def test_criterion_2_corrector_scaling(criterion_line):
    start = time.perf_counter()
    cfg = harness.resolve_config()
    params = harness.params_of(cfg)
    trace = BoundaryTrace.analytic(params, np.sin, np.linspace(0.0, params.T, int(cfg["corrector"]["samples"])))
    eps = [1e-1, 1e-2, 1e-3, 1e-4]
    table = corrector_norm_table(params, eps, trace)
    slope = {k: fit_rate(eps, [row[k] for row in table]).slope for k in table[0] if k != "eps"}
    half = ["theta_u", "theta_psi", "theta_u_t", "theta_psi_t"]
    three_half = ["x_theta_u_t", "x_theta_psi_t", "x_eps_theta_u_tx", "x_eps_theta_psi_tx"]
    scaled = np.array([math.sqrt(row["eps"]) * row["theta_u_tx"] for row in table])
    spread = float(scaled.max() / scaled.min())
    elapsed = time.perf_counter() - start
    ok_half = all(0.45 <= slope[k] <= 0.55 for k in half)
    ok_three = all(1.4 <= slope[k] <= 1.6 for k in three_half)
    ok_tx = spread < 2.0 and np.all(scaled <= 2 * scaled[0]) and np.all(scaled >= scaled[0] / 2)
    ok = ok_half and ok_three and ok_tx and elapsed < 5.0
    criterion_line(
        2,
        ok,
        "slopes "
        + ", ".join(f"{k}={slope[k]:.3f}" for k in half + three_half)
        + f"; sqrt(eps)*|theta_u_tx| spread x{spread:.3f}; {elapsed:.2f}s",
    )
    assert ok_half and ok_three and ok_tx
    assert elapsed < 5.0


def test_criterion_3_mms_orders(criterion_line):
    start = time.perf_counter()
    cfg = harness.resolve_config({"scenario": {"exact": "polynomial"}, "mms": {"eps": 0.1}})
    rows = {r["solver"]: r for r in harness.run_mms(cfg)["rows"]}
    elapsed = time.perf_counter() - start
    ov, ol = rows["viscous"]["richardson_order"], rows["limit"]["richardson_order"]
    ok = ov >= 0.9 and ol >= 0.9 and elapsed < 60.0
    criterion_line(3, ok, f"viscous order={ov:.3f}, limit order={ol:.3f}, {elapsed:.2f}s")
    assert ov >= 0.9 and ol >= 0.9
    assert elapsed < 60.0


@pytest.fixture(scope="module")
def default_sweep():
    cfg = harness.resolve_config()
    assert cfg["params"] == {"U0": 0.5, "lambda": 1.0, "L": 1.0, "T": 1.0}
    assert cfg["sweep"]["eps"] == [0.1 * 2.0**-k for k in range(6)]
    jobs = min(4, os.cpu_count() or 1)
    start = time.perf_counter()
    rep = harness.run_sweep(cfg, jobs=jobs)
    return rep, time.perf_counter() - start


def test_criterion_4_rates(default_sweep, criterion_line):
    rep, elapsed = default_sweep
    eps = rep.column("eps")
    min_dx_ok = bool(np.all(rep.column("min_dx") <= eps / 8))
    gate = rep.gate_changes
    gate_ok = all(gate[k] < 0.05 for k in harness.NORM_KEYS)
    s_l2 = rep.rates["l2"].slope
    s_inf = rep.rates["linf"].slope
    s_grad = rep.rates["grad"].slope
    parts = {
        "L2 slope in [0.85, 1.3]": 0.85 <= s_l2 <= 1.3,
        "Linf slope in [0.4, 0.7]": 0.4 <= s_inf <= 0.7,
        "grad slope >= 0.85": s_grad >= 0.85,
        "min_dx <= eps/8": min_dx_ok,
        "mesh gate < 5%": gate_ok,
        "runtime < 15 min": elapsed < 900,
    }
    failed = [k for k, v in parts.items() if not v]
    criterion_line(
        4,
        not failed,
        f"slopes L2={s_l2:.3f} Linf={s_inf:.3f} grad={s_grad:.3f}; "
        f"max gate change={max(gate[k] for k in harness.NORM_KEYS):.2%}; {elapsed:.1f}s"
        + (f"; failed: {', '.join(failed)}" if failed else ""),
    )
    assert not failed, failed


def test_criterion_5_thickness(default_sweep, criterion_line):
    rep, _ = default_sweep
    outer = rep.column("outer_sup")
    decreasing = bool(np.all(np.diff(outer) < 0))
    reduction = float(outer[-1] / outer[0])
    fraction = rep.column("inner_sup") / rep.column("trace_sup")
    ok = decreasing and reduction < 0.2 and bool(np.all(fraction >= 0.5))
    criterion_line(
        5,
        ok,
        f"outer_sup decreasing={decreasing}, final/first={reduction:.3f}, "
        f"min inner_sup/sup|u0(0,t)|={fraction.min():.3f}",
    )
    assert decreasing and reduction < 0.2
    assert np.all(fraction >= 0.5)


def test_criterion_6_energy_ratio(default_sweep, criterion_line):
    rep, _ = default_sweep
    ratio = rep.column("energy_ratio")
    spread = float(ratio.max() / ratio.min())
    ok = bool(np.all(np.isfinite(ratio)) and ratio.min() > 0 and spread < 10)
    criterion_line(6, ok, f"energy_ratio range [{ratio.min():.3f}, {ratio.max():.3f}], spread x{spread:.2f}")
    assert ok


def test_criterion_7_hardy(default_sweep, criterion_line):
    rep, _ = default_sweep
    rows = rep.rows + rep.refined_rows
    failures = sum(int(r["hardy_failures"]) for r in rows)
    worst = max(r["hardy_worst"] for r in rows)
    checked = 2 * sum(int(rep.config["sweep"]["checkpoints"]) for _ in rows)
    ok = failures == 0
    criterion_line(7, ok, f"{checked} snapshots checked, failures={failures}, worst lhs/rhs={worst:.3f}")
    assert ok


def test_criterion_8_compatibility_gate(criterion_line):
    cfg = harness.resolve_config()
    params = harness.params_of(cfg)
    good = compatibility_check(default_scenario(params), params, tol=1e-6)
    with pytest.raises(harness.CompatibilityError) as info:
        harness.run_sweep(harness.resolve_config({"scenario": {"name": "broken"}}))
    bad = info.value.report
    first = bad.residuals[CONDITIONS[0]]
    direct = compatibility_check(broken_scenario(params), params, tol=1e-6)
    ok = good.ok and max(good.residuals.values()) < 1e-6 and abs(first - 2.0) < 1e-6 and not direct.passes[CONDITIONS[0]]
    criterion_line(
        8,
        ok,
        f"default max residual={max(good.residuals.values()):.1e}; broken refused, "
        f"residual on '{CONDITIONS[0]}'={first:.6f}",
    )
    assert ok
