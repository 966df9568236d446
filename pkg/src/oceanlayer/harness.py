"""Experiment orchestration: single solves, eps sweeps, MMS studies, corrector checks.

Experiments are described by a TOML file with sections ``[params]``,
``[grid]``, ``[scheme]``, ``[scenario]``, ``[sweep]``, ``[corrector]`` and
``[output]``.  Missing keys take the values in :data:`DEFAULTS`.  Every
report embeds the fully resolved configuration and :data:`SCHEMA_VERSION`.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import analysis as an
from .corrector import (
    NORM_COLUMNS,
    NORM_ORDERS,
    boundary_identity_errors,
    corrector_coeffs,
    corrector_norm_table,
    corrector_residuals,
    residual_bound,
)
from .limit import BoundaryTrace, characteristic_limit, solve_limit
from .model import GradingSpec, PhysParams, characteristic_speeds, make_grid, scenario
from .verification import EXACT_SOLUTIONS, compatibility_check, mms_forcing_limit, mms_forcing_viscous
from .viscous import ViscousScheme, solve_viscous

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DEFAULTS = {
    "params": {"U0": 0.5, "lambda": 1.0, "L": 1.0, "T": 1.0},
    "grid": {
        "grading": "geometric",
        "n_cells": 800,
        "min_dx_factor": 1.0 / 32.0,
        "ratio": 1.025,
        "dt": 0.0025,
        "max_nodes": 200_000,
    },
    "scheme": {"theta": 0.5, "advection": "upwind2", "limit": "characteristics", "cfl": 0.9},
    "scenario": {"name": "default", "exact": "polynomial", "compat_tol": 1e-6},
    "sweep": {
        "eps": [0.1 * 2.0**-k for k in range(6)],
        "checkpoints": 21,
        "resolution_check": True,
        "gate": 0.05,
        "thickness_c": 1.0,
        "synthetic": False,
    },
    "corrector": {"eps": [1e-1, 1e-2, 1e-3, 1e-4], "trace": "sin", "samples": 1001},
    "mms": {"eps": 0.1, "n_cells": 32, "advection": "upwind", "theta": 1.0, "checkpoints": 5},
    "output": {"dir": "out", "snapshots": True},
}

MIN_DX_RULE = 1.0 / 8.0


class ConfigError(ValueError):
    pass


class CompatibilityError(ValueError):
    """Scenario data fail the t = 0 compatibility conditions."""

    def __init__(self, report):
        self.report = report
        lines = ", ".join(f"{k}: {v:.3e}" for k, v in report.failures().items())
        super().__init__(f"scenario fails compatibility check ({lines})")


class NodeCeilingError(ValueError):
    pass


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def resolve_config(raw: dict | None = None) -> dict:
    """Fill defaults and validate; returns a plain nested dict."""
    unknown = set(raw or {}) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    cfg = _merge(DEFAULTS, raw or {})
    params_of(cfg)  # validates U0 * lambda < 1 etc.
    eps = [float(e) for e in cfg["sweep"]["eps"]]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("sweep eps list must be strictly decreasing")
    cfg["sweep"]["eps"] = eps
    g = cfg["grid"]
    if g["grading"] == "geometric" and g["min_dx_factor"] > MIN_DX_RULE:
        raise ConfigError(f"min_dx_factor {g['min_dx_factor']} breaks the min_dx <= eps/8 rule")
    ViscousScheme(cfg["scheme"]["theta"], cfg["scheme"]["advection"])
    if cfg["scheme"]["limit"] not in ("characteristics", "upwind"):
        raise ConfigError("scheme.limit must be 'characteristics' or 'upwind'")
    return cfg


def load_config(path=None, eps_override=None) -> dict:
    raw = {}
    if path is not None:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    if eps_override is not None:
        raw.setdefault("sweep", {})["eps"] = list(eps_override)
    return resolve_config(raw)


def params_of(cfg) -> PhysParams:
    p = cfg["params"]
    return PhysParams(U0=float(p["U0"]), lam=float(p["lambda"]), L=float(p["L"]), T=float(p["T"]))


def scheme_of(cfg) -> ViscousScheme:
    return ViscousScheme(float(cfg["scheme"]["theta"]), cfg["scheme"]["advection"])


def case_grid(cfg, eps: float, refine: int = 0):
    """Grid for one eps; ``refine`` halves every spacing and the time step that many times."""
    params = params_of(cfg)
    g = cfg["grid"]
    factor = 2**refine
    n_cells = int(g["n_cells"]) * factor
    if g["grading"] == "geometric":
        min_dx = min(eps * float(g["min_dx_factor"]), params.L / int(g["n_cells"])) / factor
        grading = GradingSpec.geometric(min_dx, float(g["ratio"]) ** (1.0 / factor))
    else:
        grading = GradingSpec()
    multiple = int(cfg["sweep"]["checkpoints"]) - 1
    return make_grid(params, n_cells, grading, float(g["dt"]) / factor, multiple_of=multiple)


def check_node_ceiling(cfg, refine: int = 0):
    limit = int(cfg["grid"]["max_nodes"])
    eps_list = cfg["sweep"]["eps"]
    for i, eps in enumerate(eps_list):
        n = case_grid(cfg, eps, refine).n_nodes
        if n > limit:
            keep = eps_list[:i]
            raise NodeCeilingError(
                f"eps={eps:g} needs {n} nodes (> {limit}); truncate eps list to {keep}"
            )


# --- one eps ---------------------------------------------------------------------


@dataclass
class Case:
    """Everything computed for one eps at one resolution."""

    eps: float
    grid: object
    viscous: object
    limit: object
    coeffs: object
    diff: an.DifferenceFields


def solve_case(cfg, eps: float, refine: int = 0, data=None) -> Case:
    params = params_of(cfg)
    if data is None:
        data = scenario(cfg["scenario"]["name"], params)
    grid = case_grid(cfg, eps, refine)
    nck = int(cfg["sweep"]["checkpoints"])
    if cfg["scheme"]["limit"] == "characteristics":
        lim = characteristic_limit(params, grid, data, checkpoints=nck)
    else:
        c_plus, c_minus = characteristic_speeds(params)
        cfl = float(cfg["scheme"]["cfl"])
        lgrid = grid.with_dt(cfl * grid.min_dx / max(c_plus, -c_minus), multiple_of=nck - 1)
        lim = solve_limit(params, lgrid, data, cfl=cfl, checkpoints=nck)
    visc = solve_viscous(params, eps, grid, data, scheme_of(cfg), checkpoints=nck)
    coeffs = corrector_coeffs(params, eps, lim.trace)
    diff = an.difference_fields(visc, lim, coeffs)
    return Case(eps, grid, visc, lim, coeffs, diff)


def synthetic_case(cfg, eps: float, refine: int = 0) -> Case:
    """Difference fields replaced by U = eps sin(pi x / L), Psi = 0."""
    params = params_of(cfg)
    grid = case_grid(cfg, eps, refine)
    nck = int(cfg["sweep"]["checkpoints"])
    times = np.linspace(0.0, params.T, nck)
    shape = eps * np.sin(np.pi * grid.nodes / params.L)
    U = an.SpaceTimeField(grid, times, np.tile(shape, (nck, 1)))
    P = an.SpaceTimeField(grid, times, np.zeros((nck, grid.n_nodes)))
    return Case(eps, grid, None, None, None, an.DifferenceFields(U, P))


NORM_KEYS = ("l2", "u_l2", "psi_l2", "linf", "u_linf", "psi_linf", "grad")


def case_row(cfg, case: Case) -> dict:
    """Report columns for one eps."""
    params = params_of(cfg)
    eps, diff = case.eps, case.diff
    x = diff.grid.nodes
    U, P = diff.U.values, diff.Psi.values
    u_l2 = np.sqrt(np.trapezoid(U**2, x, axis=1))
    p_l2 = np.sqrt(np.trapezoid(P**2, x, axis=1))
    row = {
        "eps": eps,
        "n_nodes": int(case.grid.n_nodes),
        "n_steps": int(case.grid.n_steps),
        "min_dx": case.grid.min_dx,
        "l2": float(np.max(np.sqrt(u_l2**2 + p_l2**2))),
        "u_l2": float(u_l2.max()),
        "psi_l2": float(p_l2.max()),
        "linf": float(max(np.abs(U).max(), np.abs(P).max())),
        "u_linf": float(np.abs(U).max()),
        "psi_linf": float(np.abs(P).max()),
        "grad": an.gradient_norm(diff, eps),
        "energy_ratio": an.energy_ratio(diff, eps, params.lam),
        "bc_residual": diff.boundary_residual(),
    }
    worst, fails = 0.0, 0
    for field_ in (U, P):
        for values in field_:
            res = an.hardy_check(values, x)
            if res.rhs > 0:
                worst = max(worst, res.lhs / res.rhs)
            fails += not res.ok
    row["hardy_worst"] = worst
    row["hardy_failures"] = fails
    if case.viscous is not None:
        c = float(cfg["sweep"]["thickness_c"])
        fam = [(eps, case.viscous, case.limit)]
        van = an.thickness_probe(fam, an.ThicknessSpec("vanishing")).rows[0]
        prop = an.thickness_probe(fam, an.ThicknessSpec("proportional", c)).rows[0]
        row.update(
            outer_sup=van.outer_sup,
            delta_vanishing=van.delta,
            inner_sup=prop.inner_sup,
            inner_u=prop.inner_u,
            delta_proportional=prop.delta,
            trace_sup=prop.trace_sup,
            inner_fraction=prop.inner_fraction,
        )
    return row


def _sweep_job(args):
    cfg, eps, refine = args
    case = synthetic_case(cfg, eps, refine) if cfg["sweep"]["synthetic"] else solve_case(cfg, eps, refine)
    return case_row(cfg, case)


# --- reports --------------------------------------------------------------------------


RATE_COLUMNS = ("l2", "u_l2", "psi_l2", "linf", "u_linf", "psi_linf", "grad", "outer_sup")


@dataclass
class SweepReport:
    config: dict
    rows: list
    rates: dict
    refined_rows: list = field(default_factory=list)

    @property
    def gate_changes(self) -> dict:
        """Relative change of each norm column under one resolution doubling."""
        if not self.refined_rows:
            return {}
        out = {}
        for key in NORM_KEYS + ("energy_ratio",):
            changes = []
            for a, b in zip(self.rows, self.refined_rows):
                ref = abs(b[key])
                changes.append(abs(a[key] - b[key]) / ref if ref > 0 else 0.0)
            out[key] = max(changes)
        return out

    @property
    def gate_ok(self) -> bool:
        tol = float(self.config["sweep"]["gate"])
        return all(self.gate_changes[k] < tol for k in NORM_KEYS) if self.refined_rows else False

    def column(self, key) -> np.ndarray:
        return np.array([row[key] for row in self.rows])

    def thickness(self) -> dict:
        outer = self.column("outer_sup")
        return {
            "outer_decreasing": bool(np.all(np.diff(outer) < 0)),
            "outer_reduction": float(outer[-1] / outer[0]),
            "min_inner_fraction": float(np.min(self.column("inner_fraction"))),
        }

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "rows": self.rows,
            "rates": {k: r.to_dict() for k, r in self.rates.items()},
        }
        if self.refined_rows:
            out["refined_rows"] = self.refined_rows
            out["mesh_gate"] = {"changes": self.gate_changes, "ok": self.gate_ok}
        if self.rows and "outer_sup" in self.rows[0]:
            out["thickness"] = self.thickness()
        return out


def run_sweep(cfg: dict, jobs: int = 1, out_dir=None) -> SweepReport:
    """Solve every eps of the sweep, assemble difference fields and fit rates."""
    params = params_of(cfg)
    if not cfg["sweep"]["synthetic"]:
        data = scenario(cfg["scenario"]["name"], params)
        report = compatibility_check(data, params, float(cfg["scenario"]["compat_tol"]))
        if not report.ok:
            raise CompatibilityError(report)
    eps_list = cfg["sweep"]["eps"]
    if len(eps_list) < 3:
        raise ConfigError("a sweep needs at least 3 eps values")
    levels = [0, 1] if cfg["sweep"]["resolution_check"] else [0]
    for level in levels:
        check_node_ceiling(cfg, level)
    tasks = [(cfg, eps, level) for level in levels for eps in eps_list]
    log.info("sweep: %d eps values x %d resolution(s), %d job(s)", len(eps_list), len(levels), jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_job, tasks))
    else:
        results = [_sweep_job(t) for t in tasks]
    n = len(eps_list)
    rows = results[:n]
    refined = results[n:]
    rates = {}
    for key in RATE_COLUMNS:
        if key in rows[0] and all(row[key] > 0 for row in rows):
            rates[key] = an.fit_rate(eps_list, [row[key] for row in rows])
    rep = SweepReport(cfg, rows, rates, refined)
    for key, r in rates.items():
        log.info("  %-10s slope %.3f (r^2 %.4f)", key, r.slope, r.r_squared)
    if out_dir is not None:
        write_sweep(rep, out_dir)
    return rep


def run_thickness(cfg: dict, jobs: int = 1, out_dir=None) -> SweepReport:
    """Sweep without the resolution gate, reporting the layer-width probes."""
    cfg = copy.deepcopy(cfg)
    cfg["sweep"]["resolution_check"] = False
    rep = run_sweep(cfg, jobs)
    if out_dir is not None:
        out = _outdir(out_dir)
        cols = ["eps", "delta_vanishing", "outer_sup", "delta_proportional", "inner_sup", "inner_u", "trace_sup", "inner_fraction"]
        write_csv(out / "thickness.csv", [{k: r[k] for k in cols} for r in rep.rows], cols)
        write_json(out / "thickness.json", {"schema_version": SCHEMA_VERSION, "config": cfg, "rows": rep.rows, "summary": rep.thickness()})
    return rep


def run_single(cfg: dict, eps: float | None = None, out_dir=None) -> dict:
    """Limit solve, corrector, viscous solve and diagnostics for one eps."""
    eps = float(eps if eps is not None else cfg["sweep"]["eps"][0])
    case = solve_case(cfg, eps)
    row = case_row(cfg, case)
    result = {"schema_version": SCHEMA_VERSION, "config": cfg, "eps": eps, "row": row}
    if out_dir is not None:
        out = _outdir(out_dir)
        write_csv(out / "report.csv", [row], list(row))
        write_json(out / "report.json", result)
        write_trace(out / "trace.csv", case.limit.trace)
        if cfg["output"]["snapshots"]:
            snap = out / "snapshots"
            snap.mkdir(exist_ok=True)
            for k, t in enumerate(case.viscous.u.times):
                rows = [
                    {
                        "x": x,
                        "u": case.viscous.u[k][i],
                        "psi": case.viscous.psi[k][i],
                        "u0": case.limit.u[k][i],
                        "psi0": case.limit.psi[k][i],
                        "U": case.diff.U[k][i],
                        "Psi": case.diff.Psi[k][i],
                    }
                    for i, x in enumerate(case.grid.nodes)
                ]
                write_csv(snap / f"t{k:03d}.csv", rows, list(rows[0]))
    return result


# --- corrector check ---------------------------------------------------------------------

TRACES = {
    "sin": np.sin,
    "zero": np.zeros_like,
    "t": lambda t: np.asarray(t, dtype=float),
}


def corrector_trace(cfg) -> BoundaryTrace:
    params = params_of(cfg)
    c = cfg["corrector"]
    times = np.linspace(0.0, params.T, int(c["samples"]))
    name = c["trace"]
    if name == "limit":
        data = scenario(cfg["scenario"]["name"], params)
        grid = make_grid(params, 2, dt=params.T / (times.size - 1))
        return characteristic_limit(params, grid, data, checkpoints=2).trace
    try:
        func = TRACES[name]
    except KeyError:
        raise ConfigError(f"unknown corrector trace {name!r}") from None
    return BoundaryTrace.analytic(params, func, times)


def run_corrector_check(cfg: dict, out_dir=None) -> dict:
    """Residual identities and the norm-scaling table over ``corrector.eps``."""
    params = params_of(cfg)
    trace = corrector_trace(cfg)
    eps_list = [float(e) for e in cfg["corrector"]["eps"]]
    residuals = []
    for eps in eps_list:
        coeffs = corrector_coeffs(params, eps, trace)
        R1, R2 = corrector_residuals(coeffs)
        residuals.append(
            {
                "eps": eps,
                "R1": R1,
                "R2": R2,
                "bound": residual_bound(coeffs),
                "boundary_error": float(np.max(boundary_identity_errors(coeffs, trace))),
            }
        )
    table = corrector_norm_table(params, eps_list, trace)
    rates = {}
    for col in NORM_COLUMNS:
        vals = [row[col] for row in table]
        if all(v > 0 for v in vals) and len(vals) >= 3:
            rates[col] = an.fit_rate(eps_list, vals).to_dict()
    scaled = [math.sqrt(row["eps"]) * row["theta_u_tx"] for row in table]
    result = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "residuals": residuals,
        "norms": table,
        "rates": rates,
        "expected_orders": NORM_ORDERS,
        "sqrt_eps_theta_u_tx": scaled,
    }
    if out_dir is not None:
        out = _outdir(out_dir)
        write_csv(out / "corrector_norms.csv", table, ["eps", *NORM_COLUMNS])
        write_csv(out / "corrector_residuals.csv", residuals, list(residuals[0]))
        write_csv(
            out / "rates.csv",
            [{"column": k, **{kk: v[kk] for kk in ("slope", "intercept", "r_squared")}} for k, v in rates.items()],
            ["column", "slope", "intercept", "r_squared"],
        )
        write_json(out / "report.json", result)
    return result


# --- MMS -----------------------------------------------------------------------------------


def richardson_order(coarse, mid, fine) -> float:
    """Observed order from three nested solutions sampled on the coarse nodes."""
    d1 = np.max(np.abs(coarse - mid))
    d2 = np.max(np.abs(mid - fine))
    if d1 == 0 and d2 == 0:
        return math.inf
    if d2 == 0:
        return math.inf
    return math.log2(d1 / d2)


def run_mms(cfg: dict, out_dir=None) -> dict:
    """Richardson triplets (n, 2n, 4n) for both solvers against a manufactured solution.

    Orders below 0.5 are flagged as non-convergent.
    """
    params = params_of(cfg)
    m = cfg["mms"]
    name = cfg["scenario"]["exact"]
    try:
        exact = EXACT_SOLUTIONS[name](params.L)
    except KeyError:
        raise ConfigError(f"unknown exact solution {name!r}") from None
    eps = float(m["eps"])
    vdata = mms_forcing_viscous(exact, params, eps)
    ldata = mms_forcing_limit(exact, params)
    scheme = ViscousScheme(float(m["theta"]), m["advection"])
    nck = int(m["checkpoints"])
    c_plus, c_minus = characteristic_speeds(params)
    n0 = int(m["n_cells"])
    rows = []
    for solver in ("viscous", "limit"):
        sols, errs = [], []
        for level in range(3):
            n = n0 * 2**level
            grid = make_grid(params, n, dt=params.T / n, multiple_of=nck - 1)
            if solver == "viscous":
                sol = solve_viscous(params, eps, grid, vdata, scheme, checkpoints=nck)
            else:
                grid = grid.with_dt(0.9 * grid.min_dx / max(c_plus, -c_minus), multiple_of=nck - 1)
                sol = solve_limit(params, grid, ldata, cfl=0.9, checkpoints=nck)
            x = grid.nodes
            t = sol.u.times[-1]
            uu, pp = sol.u.values[-1], sol.psi.values[-1]
            err = max(np.max(np.abs(uu - exact.u(x, t))), np.max(np.abs(pp - exact.psi(x, t))))
            errs.append(float(err))
            stride = 2**level
            sols.append(np.concatenate([uu[::stride], pp[::stride]]))
        order = richardson_order(*sols)
        exact_order = math.log2(errs[1] / errs[2]) if errs[2] > 0 else math.inf
        if max(errs) == 0:
            status = "exact (error 0)"
        elif order < 0.5:
            status = "non-convergent"
        else:
            status = "ok"
        rows.append(
            {
                "solver": solver,
                "n_cells": n0,
                "error_n": errs[0],
                "error_2n": errs[1],
                "error_4n": errs[2],
                "richardson_order": order,
                "error_order": exact_order,
                "status": status,
            }
        )
    result = {"schema_version": SCHEMA_VERSION, "config": cfg, "exact": name, "rows": rows}
    if out_dir is not None:
        out = _outdir(out_dir)
        write_csv(out / "mms.csv", rows, list(rows[0]))
        write_json(out / "report.json", result)
    return result


# --- writers ---------------------------------------------------------------------------------


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in columns])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2)
        fh.write("\n")


def write_trace(path, trace: BoundaryTrace):
    rows = [{"t": t, "u0_trace": u, "psi0_trace": p} for t, u, p in zip(trace.times, trace.u, trace.psi)]
    write_csv(path, rows, ["t", "u0_trace", "psi0_trace"])


GNUPLOT = """\
# gnuplot script: log-log rates from report.csv
set datafile separator ","
set logscale xy
set key left top
set xlabel "eps"
set terminal pngcairo size 900,650
set output "rates.png"
plot "report.csv" using "eps":"l2" with linespoints title "sup_t ||(U,Psi)||_{L2}", \\
     "report.csv" using "eps":"linf" with linespoints title "sup ||(U,Psi)||_{Linf}", \\
     "report.csv" using "eps":"grad" with linespoints title "eps^{1/2} ||(U_x,Psi_x)||_{L2(x,t)}", \\
     "report.csv" using "eps":"outer_sup" with linespoints title "outer sup, delta = eps ln(1/eps)"
"""


def write_sweep(rep: SweepReport, out_dir):
    out = _outdir(out_dir)
    columns = list(rep.rows[0])
    write_csv(out / "report.csv", rep.rows, columns)
    if rep.refined_rows:
        write_csv(out / "report_refined.csv", rep.refined_rows, columns)
    write_csv(
        out / "rates.csv",
        [{"column": k, "slope": r.slope, "intercept": r.intercept, "r_squared": r.r_squared} for k, r in rep.rates.items()],
        ["column", "slope", "intercept", "r_squared"],
    )
    write_json(out / "report.json", rep.to_dict())
    (out / "plots.gp").write_text(GNUPLOT)
