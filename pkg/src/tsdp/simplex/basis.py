"""Basis records and solver options shared by the simplex backends."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Basis:
    """Basic variables by key, plus the nonbasic variables sitting at their upper bound.

    Structural variables use their LP key (``kind * n**2 + i * n + j``);
    the artificial of constraint node ``v`` is ``-(v + 1)``. Every other
    variable is implicitly nonbasic at its lower bound.
    """

    basic_keys: np.ndarray
    upper_keys: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def __len__(self):
        return int(np.asarray(self.basic_keys).size)


@dataclass(frozen=True)
class BackendOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    max_pivots: int | None = None  # default 50 n + 10000
    refactor_interval: int = 100
    pricing: str = "block"  # "block" or "dantzig" for the tree backend
    use_numba: bool | None = None

    def __post_init__(self):
        if not (self.feas_tol > 0 and self.opt_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.refactor_interval < 1:
            raise ValueError("refactor_interval must be >= 1")
        if self.pricing not in ("block", "dantzig"):
            raise ValueError(f"unknown pricing rule {self.pricing!r}")

    def pivot_limit(self, n: int) -> int:
        return self.max_pivots if self.max_pivots is not None else 50 * n + 10000
