"""Hybrid quantile-expectile regression (HQER).

The loss ``(1 - gamma) |s| psi(s) + gamma s^2 psi(s)`` with
``psi(s) = tau`` for ``s >= 0`` and ``1 - tau`` otherwise mixes quantile
and expectile regression.  Modules:

dist       error laws with partial moments and quadrature
loss       losses, score and curvature kernels
expectile  population and sample expectiles, level matching
fit        linear-model fitters
avar       asymptotic variances and efficiencies
infer      bootstrap covariance and gamma selection
sim        Monte Carlo scenarios and table layouts
cli        command-line front end
"""
from .avar import location_shift_avar, method_avar, mle_avar
from .dist import ErrorDistribution, format_law, parse_law
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DomainError,
    HQERError,
    ModelError,
    NumericError,
    UnsupportedError,
)
from .expectile import (
    empirical_expectile,
    inverse_expectile,
    kth_expectile,
    match_quantile_level,
    population_expectile,
)
from .fit import Dataset, FitResult, SolverOptions, fit, fit_expectile, fit_hqer, fit_kth_power, fit_quantile
from .infer import bootstrap_cov, residual_proportion, select_gamma
from .loss import LossParams
from .rng import make_rng
from .sim import ScenarioSpec, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ErrorDistribution", "parse_law", "format_law",
    "LossParams",
    "population_expectile", "empirical_expectile", "inverse_expectile", "kth_expectile",
    "match_quantile_level",
    "Dataset", "SolverOptions", "FitResult", "fit", "fit_hqer", "fit_quantile", "fit_expectile",
    "fit_kth_power",
    "method_avar", "mle_avar", "location_shift_avar",
    "select_gamma", "bootstrap_cov", "residual_proportion",
    "ScenarioSpec", "run_scenario",
    "make_rng",
    "HQERError", "DomainError", "UnsupportedError", "NumericError", "ModelError", "ConfigError",
    "DataError", "ConvergenceError",
]
