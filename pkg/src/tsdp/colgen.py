"""Column generation over the allowed support.

Start from the positions of supp(G + I) and repeatedly add the entries whose
reduced cost certifies an improvement. With LP duals ``y0`` (row sums) and
``ymu`` (stationarity), adding entry (i, j) can lower the objective iff

    R_ij = y0_i + mu_hat_i * ymu_j - 1 > 0.

R is a rank-two matrix plus a constant, so it is scanned implicitly and
never stored.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._accel import jit, resolve
from .closed_form import (alpha_of_c, diagonal_perturbation, diagonal_solution, lower_bound_l1,
                          ratio_bounds)
from .core import Perturbation, SparseStochasticMatrix, SupportSet, l1_norm, support
from .lp import build_lp_from_keys
from .errors import NotStationary
from .markov import stationary_distribution
from .simplex import BackendOptions, solve

POSITIVE = 1e-9
EXHAUSTIVE_FALLBACK_MAX_N = 10_000


@dataclass(frozen=True)
class ColGenOptions:
    delta: float = 1e-4
    m: int = 200
    heuristic_threshold: int = 200
    max_rounds: int = 100

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta!r}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


@dataclass(frozen=True)
class RoundRecord:
    round: int
    support_size: int
    objective: float
    added: int
    pivots: int
    seconds: float
    pricing: str


@dataclass
class ColGenTrace:
    obj0: float
    n_plus: int
    rounds: list[RoundRecord] = field(default_factory=list)
    status: str = ""

    @property
    def objectives(self) -> list[float]:
        return [r.objective for r in self.rounds]

    def as_dicts(self) -> list[dict]:
        return [r.__dict__.copy() for r in self.rounds]


# ---------------------------------------------------------------------------
# pricing


@jit
def _better(r1, k1, r2, k2):
    return r1 > r2 or (r1 == r2 and k1 < k2)


@jit
def _sift_down(hr, hk, size, pos):
    # min-heap on the "worse" order: the root is the weakest kept entry
    while True:
        left = 2 * pos + 1
        if left >= size:
            return
        w = left
        right = left + 1
        if right < size and _better(hr[w], hk[w], hr[right], hk[right]):
            w = right
        if _better(hr[pos], hk[pos], hr[w], hk[w]):
            hr[pos], hr[w] = hr[w], hr[pos]
            hk[pos], hk[w] = hk[w], hk[pos]
            pos = w
        else:
            return


@jit
def _sift_up(hr, hk, pos):
    while pos > 0:
        par = (pos - 1) // 2
        if _better(hr[par], hk[par], hr[pos], hk[pos]):
            hr[par], hr[pos] = hr[pos], hr[par]
            hk[par], hk[pos] = hk[pos], hk[par]
            pos = par
        else:
            return


@jit
def _in_sorted(arr, key):
    lo = 0
    hi = arr.size
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo < arr.size and arr[lo] == key


@jit
def _price_kernel(y0, ymu, mu_hat, rows, cols, excluded, omega_keys, omega_full,
                  k, tol):
    """Top-k entries of R over rows x cols, skipping excluded keys.

    Ties are broken by the smaller key, so the result is a total order.
    """
    n = mu_hat.size
    hr = np.empty(k)
    hk = np.empty(k, np.int64)
    size = 0
    ymax = -np.inf
    for t in range(cols.size):
        if ymu[cols[t]] > ymax:
            ymax = ymu[cols[t]]
    for a in range(rows.size):
        i = rows[a]
        yi = y0[i]
        mi = mu_hat[i]
        # best value this row could reach
        bound = yi + mi * ymax - 1.0
        if bound <= tol:
            continue
        if size == k and not _better(bound, -1, hr[0], hk[0]):
            continue
        base = i * n
        for t in range(cols.size):
            j = cols[t]
            r = yi + mi * ymu[j] - 1.0
            if r <= tol:
                continue
            key = base + j
            if size == k and not _better(r, key, hr[0], hk[0]):
                continue
            if _in_sorted(excluded, key):
                continue
            if not omega_full and not _in_sorted(omega_keys, key):
                continue
            if size < k:
                hr[size] = r
                hk[size] = key
                _sift_up(hr, hk, size)
                size += 1
            else:
                hr[0] = r
                hk[0] = key
                _sift_down(hr, hk, size, 0)
    return hr[:size].copy(), hk[:size].copy()


def _price_numpy(y0, ymu, mu_hat, rows, cols, excluded, omega_keys, omega_full, k, tol,
                 chunk=256):
    """Same contract as the compiled kernel, vectorised over row blocks."""
    n = mu_hat.size
    best_r = np.empty(0)
    best_k = np.empty(0, np.int64)
    ysub = ymu[cols]
    for s in range(0, rows.size, chunk):
        I = rows[s:s + chunk]
        R = y0[I, None] + mu_hat[I, None] * ysub[None, :] - 1.0
        ii, tt = np.nonzero(R > tol)
        if ii.size == 0:
            continue
        r = R[ii, tt]
        keys = I[ii].astype(np.int64) * n + cols[tt]
        ok = ~np.isin(keys, excluded)
        if not omega_full:
            ok &= np.isin(keys, omega_keys)
        r, keys = np.concatenate([best_r, r[ok]]), np.concatenate([best_k, keys[ok]])
        if r.size > k:
            # argpartition narrows the pool, lexsort settles ties by key
            cut = np.partition(-r, k - 1)[k - 1]
            keep = -r <= cut
            r, keys = r[keep], keys[keep]
        order = np.lexsort((keys, -r))[:k]
        best_r, best_k = r[order], keys[order]
    return best_r, best_k


def _top_indices(v, m):
    m = min(m, v.size)
    return np.sort(np.lexsort((np.arange(v.size), -v))[:m]).astype(np.int64)


def price_entries(y0, ymu, mu_hat, excluded_keys, n_plus: int, opts: ColGenOptions | None = None,
                  omega: SupportSet | None = None, exhaustive: bool | None = None,
                  use_numba: bool | None = None) -> SupportSet:
    """Up to ``n_plus`` candidate positions with the largest positive reduced cost.

    Parameters
    ----------
    y0, ymu : ndarray
        Duals of the current LP.
    mu_hat : array_like
        Target distribution; ``mu_hat[i]`` multiplies ``ymu[j]`` in ``R_ij``.
    excluded_keys : ndarray
        Sorted keys ``i * n + j`` that are not candidates (already in the
        LP, or inside supp(G)).
    n_plus : int
        Maximum number of entries returned.
    opts : ColGenOptions
        ``m`` and ``heuristic_threshold`` select the scan.
    omega : SupportSet, optional
        Allowed positions; defaults to all.
    exhaustive : bool, optional
        Force (True) or forbid (False) the full scan; by default it is used
        when ``n <= opts.heuristic_threshold``.

    Returns
    -------
    SupportSet
        The chosen positions. Empty means no positive reduced cost was found.

    Notes
    -----
    The restricted scan takes rows among the ``m`` largest ``y0`` and the
    ``m`` largest ``mu_hat``, and columns among the ``2m`` largest ``ymu``.
    """
    opts = opts or ColGenOptions()
    y0 = np.asarray(y0, dtype=np.float64)
    ymu = np.asarray(ymu, dtype=np.float64)
    mu_hat = np.asarray(mu_hat, dtype=np.float64).ravel()
    n = mu_hat.size
    excluded = np.asarray(excluded_keys, dtype=np.int64)
    omega_full = omega is None or omega.is_full
    omega_keys = np.empty(0, np.int64) if omega_full else omega.keys
    if exhaustive is None:
        exhaustive = n <= opts.heuristic_threshold
    if exhaustive:
        rows = np.arange(n, dtype=np.int64)
        cols = np.arange(n, dtype=np.int64)
    else:
        rows = np.union1d(_top_indices(y0, opts.m), _top_indices(mu_hat, opts.m))
        cols = _top_indices(ymu, 2 * opts.m)
    if n_plus <= 0:
        return SupportSet.from_keys(n, np.empty(0, np.int64))
    if resolve(use_numba):
        _, keys = _price_kernel(y0, ymu, mu_hat, rows, cols, excluded, omega_keys,
                                omega_full, int(n_plus), POSITIVE)
    else:
        _, keys = _price_numpy(y0, ymu, mu_hat, rows, cols, excluded, omega_keys,
                               omega_full, int(n_plus), POSITIVE)
    return SupportSet.from_keys(n, keys)


def reduced_cost_entries(y0, ymu, mu_hat, keys) -> np.ndarray:
    """``R_ij`` for the positions encoded in ``keys``."""
    mu_hat = np.asarray(mu_hat, dtype=np.float64).ravel()
    n = mu_hat.size
    keys = np.asarray(keys, dtype=np.int64)
    i, j = keys // n, keys % n
    return np.asarray(y0)[i] + mu_hat[i] * np.asarray(ymu)[j] - 1.0


# ---------------------------------------------------------------------------
# main loop


def _diagonal_objective(G, mu_hat) -> float:
    """‖Δ(α*)‖₁, the reference objective of round zero.

    Only the stopping test reads it, so when the stationary vector is too
    badly conditioned to pass the stationarity check the best available
    estimate is used as is.
    """
    mu = stationary_distribution(G)
    try:
        return l1_norm(diagonal_solution(G, mu, mu_hat))
    except NotStationary:
        b = ratio_bounds(mu, mu_hat)
        return l1_norm(diagonal_perturbation(G, alpha_of_c(b, b.c_star)))


def column_generate(G: SparseStochasticMatrix, mu_hat, omega: SupportSet | None = None,
                    opts: ColGenOptions | None = None, backend: str = "tree",
                    backend_opts: BackendOptions | None = None):
    """Batch column generation for the minimum-l1 perturbation on ``omega``.

    Parameters
    ----------
    G : SparseStochasticMatrix
        Irreducible transition matrix.
    mu_hat : array_like
        Target distribution.
    omega : SupportSet, optional
        Allowed positions (default: all n**2).
    opts : ColGenOptions, optional
        ``delta`` is the relative decrease, measured against ``‖G‖₁ = n``,
        below which the loop stops. ``delta = 0`` runs to a certified
        optimum.
    backend : str
        Simplex backend, warm-started from the previous round's basis.

    Returns
    -------
    (Perturbation, ColGenTrace)

    Raises
    ------
    Infeasible
        When the starting support supp(G + I) ∩ Ω admits no solution.
    """
    opts = opts or ColGenOptions()
    backend_opts = backend_opts or BackendOptions()
    mu_hat = np.asarray(mu_hat, dtype=np.float64).ravel()
    n = G.n
    omega = omega or SupportSet.full(n)
    norm_G = float(n)

    if lower_bound_l1(G, mu_hat) <= POSITIVE:
        trace = ColGenTrace(obj0=0.0, n_plus=0, status="optimal")
        return Perturbation.zeros(n), trace
    trace = ColGenTrace(obj0=_diagonal_objective(G, mu_hat), n_plus=0)
    obj0 = trace.obj0

    gkeys = G.keys()
    gi = support(G, include_diagonal=True).keys
    start = omega.intersect_keys(gi)
    trace.n_plus = n_plus = int(start.size)
    in_g = np.isin(start, gkeys, assume_unique=True)
    pm_keys = start[in_g]
    zero_keys = start[~in_g]

    prev2, prev1 = np.inf, obj0
    basis = None
    added = None
    delta_out = None
    for rnd in range(1, opts.max_rounds + 1):
        if opts.delta > 0 and not (prev2 - prev1 > opts.delta * norm_G):
            trace.status = "delta-stop"
            break
        t0 = time.perf_counter()
        problem = build_lp_from_keys(G, mu_hat, zero_keys, pm_keys)
        sol = solve(problem, warm=basis, opts=backend_opts, backend=backend)
        basis = sol.basis
        delta_out = problem.perturbation(sol.primal, omega=omega)

        excluded = np.union1d(gkeys, zero_keys)
        exhaustive = n <= opts.heuristic_threshold
        added = price_entries(sol.y0, sol.ymu, mu_hat, excluded, n_plus, opts, omega,
                              exhaustive=exhaustive, use_numba=backend_opts.use_numba)
        how = "exhaustive" if exhaustive else "heuristic"
        if len(added) == 0 and not exhaustive and opts.delta == 0 \
                and n <= EXHAUSTIVE_FALLBACK_MAX_N:
            added = price_entries(sol.y0, sol.ymu, mu_hat, excluded, n_plus, opts, omega,
                                  exhaustive=True, use_numba=backend_opts.use_numba)
            how = "exhaustive-fallback"
        trace.rounds.append(RoundRecord(rnd, int(zero_keys.size + pm_keys.size), sol.objective,
                                        len(added), sol.pivots, time.perf_counter() - t0, how))
        prev2, prev1 = prev1, sol.objective
        if len(added) == 0:
            trace.status = "heuristic-optimal" if how == "heuristic" else "optimal"
            break
        zero_keys = np.union1d(zero_keys, added.keys)
    else:
        trace.status = "max-rounds"
    return delta_out, trace
