"""Sparse LP for the minimum-l1 perturbation.

Each allowed position (i, j) contributes one variable if ``G_ij = 0``
(``Zero`` kind, the new entry) and two if ``G_ij > 0`` (``Plus`` and
``Minus``, the increase and the decrease bounded by ``G_ij``). There are
2n equality rows::

    row i      sum_j  (zero + plus - minus)_ij          = 0
    column j   sum_i  mu_hat_i (zero + plus - minus)_ij = z_j

with ``z = mu_hatᵀ (I - G)``. Every variable has cost one, so the objective
is the l1 norm of the perturbation.

Variables are identified across problems by the integer key
``kind * n**2 + i * n + j``; this is what makes warm starts portable
between the growing problems of column generation.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
import scipy.sparse as sp

from .core import Perturbation, SparseStochasticMatrix, SupportSet, csr_keys
from .errors import BackendError, DimensionMismatch, EmptySupport

STRUCTURAL_ZERO = 1e-9


class VarKind(IntEnum):
    ZERO = 0
    PLUS = 1
    MINUS = 2


class Status(IntEnum):
    AT_LOWER = 0
    AT_UPPER = 1
    BASIC = 2


@dataclass(frozen=True)
class VariableDescriptor:
    kind: VarKind
    position: tuple[int, int]
    lower: float
    upper: float


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Array-of-columns view of the LP; column ``e`` is described by
    ``kind[e], row[e], col[e], upper[e]``."""

    n: int
    mu_hat: np.ndarray
    z: np.ndarray
    kind: np.ndarray
    row: np.ndarray
    col: np.ndarray
    upper: np.ndarray

    @property
    def num_rows(self) -> int:
        return 2 * self.n

    @property
    def num_vars(self) -> int:
        return int(self.kind.size)

    @property
    def rhs(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.n), self.z])

    @property
    def cost(self) -> np.ndarray:
        return np.ones(self.num_vars)

    @property
    def keys(self) -> np.ndarray:
        n = self.n
        return self.kind.astype(np.int64) * n * n + self.row * n + self.col

    @property
    def counts(self) -> tuple[int, int]:
        """(p0, p±): number of Zero variables and of Plus/Minus pairs."""
        p0 = int(np.count_nonzero(self.kind == VarKind.ZERO))
        return p0, int(np.count_nonzero(self.kind == VarKind.PLUS))

    @property
    def variables(self) -> list[VariableDescriptor]:
        return [
            VariableDescriptor(VarKind(k), (int(i), int(j)), 0.0, float(u))
            for k, i, j, u in zip(self.kind, self.row, self.col, self.upper)
        ]

    def signs(self) -> np.ndarray:
        return np.where(self.kind == VarKind.MINUS, -1.0, 1.0)

    def constraint_matrix(self) -> sp.csc_array:
        """The 2n x p matrix: row-sum block on top, stationarity block below."""
        p = self.num_vars
        s = self.signs()
        rows = np.empty(2 * p, dtype=np.int64)
        rows[0::2] = self.row
        rows[1::2] = self.n + self.col
        vals = np.empty(2 * p)
        vals[0::2] = s
        vals[1::2] = s * self.mu_hat[self.row]
        indptr = np.arange(0, 2 * p + 1, 2)
        return sp.csc_array((vals, rows, indptr), shape=(2 * self.n, p))

    def perturbation(self, x: np.ndarray, threshold: float = STRUCTURAL_ZERO,
                     omega: SupportSet | None = None) -> Perturbation:
        """Assemble ``zero + plus - minus`` from primal values."""
        x = np.where(np.abs(x) > threshold, x, 0.0)
        n = self.n
        parts = []
        for k in VarKind:
            sel = (self.kind == k) & (x != 0.0)
            parts.append(sp.csr_array((x[sel], (self.row[sel], self.col[sel])), shape=(n, n)))
        zero, plus, minus = parts
        both = np.intersect1d(csr_keys(plus), csr_keys(minus))
        if both.size:
            raise BackendError(
                f"{both.size} position(s) carry both an increase and a decrease"
            )
        return Perturbation(zero + plus - minus, zero=zero, plus=plus, minus=minus,
                            omega=omega)


@dataclass
class LpSolution:
    """Optimal basic solution.

    ``primal`` and ``status`` are indexed like the problem's columns;
    ``basis`` carries the basic keys so a later, larger problem can be
    warm-started from it.
    """

    primal: np.ndarray
    y0: np.ndarray
    ymu: np.ndarray
    status: np.ndarray
    objective: float
    basis: "object"
    pivots: int = 0
    phase1_pivots: int = 0
    backend: str = ""

    @property
    def duals(self) -> np.ndarray:
        return np.concatenate([self.y0, self.ymu])


def partition_support(omega: SupportSet, G: SparseStochasticMatrix):
    """Split Ω into the positions outside supp(G) and those inside."""
    if omega.n != G.n:
        raise DimensionMismatch(f"support set is for n={omega.n}, G has n={G.n}")
    gkeys = G.keys()
    if omega.is_full:
        allk = np.arange(G.n * G.n, dtype=np.int64)
        zero = np.setdiff1d(allk, gkeys, assume_unique=True)
        pm = gkeys
    else:
        inside = np.isin(omega.keys, gkeys, assume_unique=True)
        zero, pm = omega.keys[~inside], omega.keys[inside]
    return (SupportSet.from_keys(G.n, zero), SupportSet.from_keys(G.n, pm))


def build_lp(G: SparseStochasticMatrix, mu_hat, omega: SupportSet) -> LpProblem:
    """Build the LP restricted to the positions in ``omega``."""
    mu_hat = np.asarray(mu_hat, dtype=np.float64).ravel()
    if mu_hat.size != G.n:
        raise DimensionMismatch(f"mu_hat has length {mu_hat.size}, G is {G.n}x{G.n}")
    if len(omega) == 0:
        raise EmptySupport("support set is empty")
    omega0, omega_pm = partition_support(omega, G)
    return build_lp_from_keys(G, mu_hat, omega0.keys, omega_pm.keys)


def build_lp_from_keys(G: SparseStochasticMatrix, mu_hat, zero_keys, pm_keys) -> LpProblem:
    """LP over explicit sorted position keys: ``zero_keys`` outside supp(G),
    ``pm_keys`` inside it."""
    mu_hat = np.asarray(mu_hat, dtype=np.float64).ravel()
    zero_keys = np.asarray(zero_keys, dtype=np.int64)
    pm_keys = np.asarray(pm_keys, dtype=np.int64)
    n = G.n
    gkeys = G.keys()
    gpos = np.searchsorted(gkeys, pm_keys)
    gval = G.csr.data[gpos]
    p0, q = zero_keys.size, pm_keys.size
    kind = np.concatenate([
        np.full(p0, VarKind.ZERO, np.int8),
        np.full(q, VarKind.PLUS, np.int8),
        np.full(q, VarKind.MINUS, np.int8),
    ])
    keys = np.concatenate([zero_keys, pm_keys, pm_keys])
    upper = np.concatenate([np.full(p0 + q, np.inf), gval])
    z = mu_hat - G.csr.T @ mu_hat
    return LpProblem(n, mu_hat, z, kind, keys // n, keys % n, upper)


def sparsity_bound(G: SparseStochasticMatrix, omega: SupportSet) -> int:
    """Upper bound ``min(|Ω|, |supp(G) ∩ Ω| + 2n)`` on the support of a vertex optimum."""
    inside = G.nnz if omega.is_full else int(np.count_nonzero(omega.contains_keys(G.keys())))
    return min(len(omega), inside + 2 * G.n)


def lp_residuals(G: SparseStochasticMatrix, mu_hat, delta: Perturbation) -> dict:
    """Row-sum, stationarity and sign residuals of ``G + delta``."""
    mu_hat = np.asarray(mu_hat, dtype=np.float64).ravel()
    D = delta.entries
    rowsum = np.abs(np.asarray(D.sum(axis=1)).ravel())
    H = (G.csr + D).tocsr()
    stat = np.abs(H.T @ mu_hat - mu_hat)
    return {
        "rowsum": float(rowsum.max()) if rowsum.size else 0.0,
        "stationarity": float(stat.max()) if stat.size else 0.0,
        "min_entry": float(min(H.data.min(), 0.0)) if H.nnz else 0.0,
    }


def solve_tsdp_lp(G: SparseStochasticMatrix, mu_hat, omega: SupportSet,
                  backend: str = "tree", warm=None, opts=None):
    """Minimum-l1 perturbation with support in ``omega``.

    Returns
    -------
    (Perturbation, LpSolution)

    Raises
    ------
    Infeasible
        If no perturbation supported on ``omega`` reaches ``mu_hat``; this
        cannot happen when ``omega`` contains supp(G + I).
    """
    from . import simplex

    problem = build_lp(G, mu_hat, omega)
    sol = simplex.solve(problem, warm=warm, opts=opts, backend=backend)
    delta = problem.perturbation(sol.primal, omega=omega)
    return delta, sol


__all__ = [
    "VarKind", "Status", "VariableDescriptor", "LpProblem", "LpSolution",
    "partition_support", "build_lp", "build_lp_from_keys", "sparsity_bound", "solve_tsdp_lp",
    "lp_residuals", "STRUCTURAL_ZERO",
]
