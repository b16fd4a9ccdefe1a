"""Closed-form perturbations and norm bounds.

The family ``G(alpha) = G + D(alpha)(I - G)`` keeps every entry of G and
adds self loops. For a target ``mu_hat`` the member with smallest
perturbation is given by ``alpha = 1 - c * mu / mu_hat`` at the largest
admissible ``c``. The rest of the module covers the bounds that sandwich
the true optimum, the single-row (rank-one) case and the interval check
for coherently ordered targets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import TOL_FEAS, Distribution, Perturbation, SparseStochasticMatrix
from .errors import DimensionMismatch, NotStationary, OutOfRange
from .markov import verify_stationary

STATIONARY_CHECK = 1e-8


@dataclass(frozen=True)
class RatioBounds:
    """Ratios ``r = mu / mu_hat`` with their extrema.

    Attributes
    ----------
    r : ndarray
        Componentwise ratio.
    r_lo, r_hi : float
        Smallest and largest ratio.
    c_star : float
        ``1 / r_hi``, the largest admissible scaling parameter.
    """

    r: np.ndarray
    r_lo: float
    r_hi: float
    c_star: float


def _vec(d) -> np.ndarray:
    return np.asarray(d, dtype=np.float64).ravel()


def ratio_bounds(mu, mu_hat) -> RatioBounds:
    mu, mu_hat = _vec(mu), _vec(mu_hat)
    if mu.size != mu_hat.size:
        raise DimensionMismatch(f"distributions of length {mu.size} and {mu_hat.size}")
    r = mu / mu_hat
    r_hi = float(r.max())
    return RatioBounds(r, float(r.min()), r_hi, 1.0 / r_hi)


def alpha_of_c(bounds: RatioBounds, c: float) -> np.ndarray:
    """Diagonal weights ``alpha_i = 1 - c * r_i`` for ``0 < c <= c_star``."""
    if not (c > 0) or c > bounds.c_star * (1 + 4 * np.finfo(float).eps):
        raise OutOfRange(f"c = {c!r} outside (0, {bounds.c_star!r}]")
    alpha = 1.0 - c * bounds.r
    if c >= bounds.c_star:
        # the ratio maximisers land exactly on zero
        alpha[bounds.r == bounds.r_hi] = 0.0
    return np.clip(alpha, 0.0, None)


def diagonal_perturbation(G: SparseStochasticMatrix, alpha) -> Perturbation:
    """``D(alpha) (I - G)`` as a sparse perturbation."""
    alpha = _vec(alpha)
    if alpha.size != G.n:
        raise DimensionMismatch(f"alpha has length {alpha.size}, G is {G.n}x{G.n}")
    I_minus_G = sp.identity(G.n, format="csr") - G.csr
    delta = sp.diags_array(alpha) @ I_minus_G
    return Perturbation(delta)


def diagonal_solution(G: SparseStochasticMatrix, mu, mu_hat) -> Perturbation:
    """Smallest member ``D(alpha*) (I - G)`` of the diagonal family.

    ``G + delta`` has stationary distribution ``mu_hat``; rows where
    ``mu / mu_hat`` is maximal are left untouched.
    """
    mu, mu_hat = _vec(mu), _vec(mu_hat)
    if mu.size != G.n or mu_hat.size != G.n:
        raise DimensionMismatch("distribution length differs from matrix dimension")
    res = verify_stationary(G, mu)
    if res > STATIONARY_CHECK:
        raise NotStationary(f"mu is not stationary for G (residual {res:.3e})")
    bounds = ratio_bounds(mu, mu_hat)
    delta = diagonal_perturbation(G, alpha_of_c(bounds, bounds.c_star)).entries.tocsr()
    _keep_positive(G.csr, delta)
    return Perturbation(delta)


def _keep_positive(Gc, delta) -> None:
    """Stop ``G + delta`` from cancelling to zero off the diagonal.

    Every surviving entry equals ``c r_i G_ij > 0``, but when ``c r_i`` is
    below machine epsilon the sum rounds to exactly zero and cuts an edge.
    Such entries are left one ulp of ``G_ij`` above zero instead.
    """
    rows = np.repeat(np.arange(delta.shape[0]), np.diff(delta.indptr))
    off = rows != delta.indices
    g = Gc[rows[off], delta.indices[off]]
    d = delta.data[off]
    dead = (g > 0) & (g + d <= 0)
    if dead.any():
        d[dead] = np.nextafter(-g[dead], 0.0)
        delta.data[off] = d


def _z(G: SparseStochasticMatrix, mu_hat: np.ndarray) -> np.ndarray:
    return mu_hat - G.csr.T @ mu_hat


def lower_bound_l1(G: SparseStochasticMatrix, mu_hat) -> float:
    """``‖mu_hatᵀ(I - G)‖₁ / ‖mu_hat‖∞``, valid for every feasible perturbation."""
    mu_hat = _vec(mu_hat)
    return float(np.abs(_z(G, mu_hat)).sum() / mu_hat.max())


def _norm_I_minus_G(G: SparseStochasticMatrix) -> float:
    d = G.csr.diagonal()
    # off-diagonal mass of row i is 1 - G_ii, and |1 - G_ii| on the diagonal
    return float(2.0 * np.sum(1.0 - d))


def upper_bound_l1(G: SparseStochasticMatrix, bounds: RatioBounds) -> float:
    return (bounds.r_hi - bounds.r_lo) / bounds.r_hi * _norm_I_minus_G(G)


def rank_one_target(mu, j: int, lam: float) -> Distribution:
    """``(mu + lam e_j) / (1 + lam)``."""
    mu = _vec(mu)
    if not (0 <= j < mu.size):
        raise OutOfRange(f"index {j} outside [0, {mu.size})")
    if not lam > 0:
        raise OutOfRange(f"lambda must be positive, got {lam!r}")
    v = mu.copy()
    v[j] += lam
    return Distribution(v / (1.0 + lam))


@dataclass(frozen=True)
class RankOneResult:
    delta: Perturbation
    alpha_j: float
    certified: bool


def rank_one_solution(G: SparseStochasticMatrix, mu, j: int, lam: float) -> RankOneResult:
    """Single-row perturbation reaching ``rank_one_target(mu, j, lam)``.

    ``certified`` is set when ``lam >= max_i mu_i - mu_j``, in which case
    the returned perturbation is a global optimum.
    """
    mu = _vec(mu)
    if not (0 <= j < G.n):
        raise OutOfRange(f"index {j} outside [0, {G.n})")
    if not lam > 0:
        raise OutOfRange(f"lambda must be positive, got {lam!r}")
    alpha_j = lam / (mu[j] + lam)
    alpha = np.zeros(G.n)
    alpha[j] = alpha_j
    others = np.delete(mu, j)
    certified = bool(others.size == 0 or lam >= others.max() - mu[j])
    return RankOneResult(diagonal_perturbation(G, alpha), alpha_j, certified)


def unconstrained_rank_one_l1(G: SparseStochasticMatrix, mu_hat) -> tuple[Perturbation, bool]:
    """Minimum-norm perturbation when the sign constraint ``G + delta >= 0`` is dropped.

    All of ``mu_hatᵀ(I - G)`` is placed in the row with the largest target
    weight (smallest index on ties). Returns the perturbation and whether
    ``G + delta`` happens to be nonnegative anyway.
    """
    mu_hat = _vec(mu_hat)
    i = int(np.argmax(mu_hat))
    z = _z(G, mu_hat) / mu_hat[i]
    cols = np.flatnonzero(z)
    delta = sp.csr_array(
        (z[cols], (np.full(cols.size, i), cols)), shape=(G.n, G.n)
    )
    pert = Perturbation(delta)
    row = G.csr[[i], :].toarray().ravel() + z
    feasible = bool(row.min() >= -TOL_FEAS)
    return pert, feasible


def coherent_interval_check(mu, mu_hat):
    """Ratio interval for the given pairing and for the sorted pairing.

    Sorting both vectors non-decreasingly before taking ratios never widens
    ``[min mu_i / mu_hat_i, max mu_i / mu_hat_i]``.
    """
    mu, mu_hat = _vec(mu), _vec(mu_hat)
    if mu.size != mu_hat.size:
        raise DimensionMismatch(f"distributions of length {mu.size} and {mu_hat.size}")
    r = mu / mu_hat
    rs = np.sort(mu) / np.sort(mu_hat)
    return (float(r.min()), float(r.max())), (float(rs.min()), float(rs.max()))
