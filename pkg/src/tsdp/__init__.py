"""Minimal perturbations of Markov chains towards a target stationary distribution.

Given a row-stochastic ``G`` and a positive target ``mu_hat``, find ``Δ``
with ``G + Δ`` stochastic and ``mu_hat`` stationary for it. Provided
methods, from cheapest to best: Metropolis-Hastings, the diagonal
closed form, the sparse LP on a fixed support, and column generation
over the full support.
"""
from .closed_form import (RankOneResult, RatioBounds, alpha_of_c, coherent_interval_check,
                          diagonal_perturbation, diagonal_solution, lower_bound_l1,
                          rank_one_solution, rank_one_target, ratio_bounds,
                          unconstrained_rank_one_l1, upper_bound_l1)
from .colgen import ColGenOptions, ColGenTrace, RoundRecord, column_generate, price_entries
from .core import (Distribution, Perturbation, SparseStochasticMatrix, SupportKind, SupportSet,
                   ValidationReport, apply_perturbation, l1_norm, support, validate_stochastic)
from .errors import *  # noqa: F401,F403
from .errors import __all__ as _error_names
from .lp import (LpProblem, LpSolution, build_lp, lp_residuals, solve_tsdp_lp,
                 sparsity_bound)
from .markov import (StationaryOptions, StationaryReport, is_irreducible, stationary_distribution,
                     strongly_connected_components, verify_stationary)
from .metropolis import MHDiagnostics, metropolis_hastings
from .pipeline import run_method
from .simplex import BackendOptions, Basis

__version__ = "0.1.0"

__all__ = [
    "SparseStochasticMatrix", "Distribution", "SupportKind", "SupportSet", "Perturbation",
    "ValidationReport", "validate_stochastic", "support", "l1_norm", "apply_perturbation",
    "StationaryOptions", "StationaryReport", "stationary_distribution", "verify_stationary",
    "strongly_connected_components", "is_irreducible",
    "RatioBounds", "ratio_bounds", "alpha_of_c", "diagonal_perturbation", "diagonal_solution",
    "lower_bound_l1", "upper_bound_l1", "rank_one_target", "rank_one_solution",
    "RankOneResult", "unconstrained_rank_one_l1", "coherent_interval_check",
    "metropolis_hastings", "MHDiagnostics",
    "LpProblem", "LpSolution", "build_lp", "solve_tsdp_lp", "sparsity_bound", "lp_residuals",
    "BackendOptions", "Basis",
    "ColGenOptions", "ColGenTrace", "RoundRecord", "column_generate", "price_entries",
    "run_method",
    *_error_names,
]
