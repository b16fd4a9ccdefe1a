"""Simplex backends for the perturbation LP.

``tree`` exploits the network structure (two nonzeros per column) and is the
default; ``lu`` is a general bounded revised simplex kept as an independent
implementation. Further backends can be plugged in with
:func:`register_backend`.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from ..lp import LpProblem, LpSolution
from .basis import BackendOptions, Basis
from .lu import solve_lu
from .tree import solve_tree

_BACKENDS: dict[str, Callable] = {"tree": solve_tree, "lu": solve_lu}


def register_backend(name: str, fn: Callable) -> None:
    """Add a solver ``fn(problem, warm, opts) -> LpSolution`` under ``name``."""
    _BACKENDS[name] = fn


def backends() -> list[str]:
    return sorted(_BACKENDS)


def solve(problem: LpProblem, warm: Basis | None = None, opts: BackendOptions | None = None,
          backend: str = "tree") -> LpSolution:
    """Optimal basic solution of ``problem``.

    Parameters
    ----------
    problem : LpProblem
    warm : Basis, optional
        Starting basis from an earlier solve. Variables it references must
        still exist; variables it does not mention start at their lower
        bound. An unusable basis falls back silently to a cold start.
    opts : BackendOptions, optional
    backend : str
        ``"tree"`` (default) or ``"lu"``.

    Raises
    ------
    Infeasible, PivotLimit, Unbounded
    """
    try:
        fn = _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}; choose from {backends()}") from None
    return fn(problem, warm, opts or BackendOptions())


def extract_duals(solution: LpSolution) -> tuple[np.ndarray, np.ndarray]:
    """(y0, ymu): duals of the row-sum block and of the stationarity block."""
    return solution.y0, solution.ymu


def reduced_costs(problem: LpProblem, solution: LpSolution) -> np.ndarray:
    """``c - Aᵀy`` for every structural column."""
    y = solution.duals
    return problem.cost - problem.constraint_matrix().T @ y


def dual_objective(problem: LpProblem, solution: LpSolution) -> float:
    """``bᵀy`` plus the contribution of variables nonbasic at their upper bound."""
    from ..lp import Status

    d = reduced_costs(problem, solution)
    up = solution.status == Status.AT_UPPER
    return float(problem.rhs @ solution.duals + (problem.upper[up] * d[up]).sum())


__all__ = ["Basis", "BackendOptions", "solve", "extract_duals", "register_backend",
           "backends", "reduced_costs", "dual_objective"]
