"""Viscous boundary layers of a linearized ocean system.

Finite-difference solvers for the viscous system and its eps = 0 limit,
closed-form boundary-layer correctors, and the diagnostics used to measure
convergence rates as eps -> 0.
"""

from .analysis import (
    DifferenceFields,
    RateReport,
    ThicknessSpec,
    difference_fields,
    energy_ratio,
    fit_rate,
    hardy_check,
    norm_L2,
    norm_Linf,
    norm_weighted_x,
    seminorm_H1,
    sup_over_time,
    thickness_probe,
    w_field,
)
from .corrector import (
    CorrectorCoeffs,
    corrector_coeffs,
    corrector_derivatives,
    corrector_eval,
    corrector_norm_table,
    corrector_residuals,
    corrector_time_derivatives,
)
from .limit import (
    BoundaryTrace,
    LimitSolution,
    boundary_closure,
    characteristic_limit,
    characteristic_solution,
    from_riemann,
    solve_limit,
    to_riemann,
)
from .model import (
    GradingSpec,
    Grid,
    PhysParams,
    ProblemData,
    SpaceTimeField,
    characteristic_speeds,
    default_scenario,
    make_grid,
    r_rate,
)
from .verification import (
    ExactSolution,
    compatibility_check,
    mms_forcing_limit,
    mms_forcing_viscous,
)
from .viscous import ViscousScheme, ViscousSolution, discrete_residual_viscous, solve_viscous

__version__ = "0.1.0"

__all__ = [
    "BoundaryTrace",
    "CorrectorCoeffs",
    "DifferenceFields",
    "ExactSolution",
    "GradingSpec",
    "Grid",
    "LimitSolution",
    "PhysParams",
    "ProblemData",
    "RateReport",
    "SpaceTimeField",
    "ThicknessSpec",
    "ViscousScheme",
    "ViscousSolution",
    "boundary_closure",
    "characteristic_limit",
    "characteristic_solution",
    "characteristic_speeds",
    "compatibility_check",
    "corrector_coeffs",
    "corrector_derivatives",
    "corrector_eval",
    "corrector_norm_table",
    "corrector_residuals",
    "corrector_time_derivatives",
    "default_scenario",
    "difference_fields",
    "discrete_residual_viscous",
    "energy_ratio",
    "fit_rate",
    "from_riemann",
    "hardy_check",
    "make_grid",
    "mms_forcing_limit",
    "mms_forcing_viscous",
    "norm_L2",
    "norm_Linf",
    "norm_weighted_x",
    "r_rate",
    "seminorm_H1",
    "solve_limit",
    "solve_viscous",
    "sup_over_time",
    "thickness_probe",
    "to_riemann",
    "w_field",
]
