"""Metropolis-Hastings baseline: a mu_hat-reversible chain built from G."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._accel import jit, resolve
from .core import Perturbation, SparseStochasticMatrix, csr_keys
from .markov import is_irreducible


@jit
def _complement_diagonal(indptr, indices, data, n):
    # Kahan-summed 1 - sum of the off-diagonal entries of each row
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        comp = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                continue
            y = data[p] - comp
            t = s + y
            comp = (t - s) - y
            s = t
        out[i] = 1.0 - s
    return out


@dataclass(frozen=True)
class MHDiagnostics:
    reversibility_residual: float
    irreducible: bool
    support_ok: bool
    G_hat: SparseStochasticMatrix


def _transpose_lookup(csr: sp.csr_array, keys: np.ndarray, n: int):
    """Value of M[j, i] for every stored entry M[i, j] (0 where absent)."""
    rows = keys // n
    cols = keys % n
    tkeys = cols * n + rows
    pos = np.searchsorted(keys, tkeys)
    pos = np.minimum(pos, keys.size - 1)
    hit = keys[pos] == tkeys
    return np.where(hit, csr.data[pos], 0.0), hit


def metropolis_hastings(G: SparseStochasticMatrix, mu_hat, use_numba: bool | None = None):
    """Metropolis-Hastings chain for target ``mu_hat``.

    Off-diagonal entries are ``min(G_ij, mu_hat_j / mu_hat_i * G_ji)``; the
    diagonal absorbs the rest of each row.

    Parameters
    ----------
    G : SparseStochasticMatrix
    mu_hat : array_like
        Positive target distribution.

    Returns
    -------
    delta : Perturbation
        ``G_hat - G``.
    diagnostics : MHDiagnostics
        Detailed-balance residual, irreducibility of ``G_hat`` and whether
        ``supp(G_hat)`` stays inside ``supp(I) ∪ (supp(G) ∩ supp(Gᵀ))``.
        A reducible result is reported here, never raised.
    """
    mu_hat = np.asarray(mu_hat, dtype=np.float64).ravel()
    n = G.n
    csr = G.csr
    keys = csr_keys(csr)
    rows = keys // n
    cols = keys % n
    g_t, _ = _transpose_lookup(csr, keys, n)
    off = rows != cols
    vals = np.where(off, np.minimum(csr.data, mu_hat[cols] / mu_hat[rows] * g_t), 0.0)

    H = sp.csr_array((vals, csr.indices.copy(), csr.indptr.copy()), shape=(n, n))
    H.eliminate_zeros()
    kern = _complement_diagonal if resolve(use_numba) else _complement_diagonal.py_func
    diag = kern(H.indptr.astype(np.int64), H.indices.astype(np.int64), H.data, n)
    H = (H + sp.diags_array(diag).tocsr()).tocsr()
    H.sum_duplicates()
    H.sort_indices()
    H.eliminate_zeros()
    G_hat = SparseStochasticMatrix(H, check=False)

    hkeys = csr_keys(H)
    h_t, _ = _transpose_lookup(H, hkeys, n)
    hr, hc = hkeys // n, hkeys % n
    flow = mu_hat[hr] * H.data
    flow_t = mu_hat[hc] * h_t
    rev = float(np.abs(flow - flow_t).max()) if hkeys.size else 0.0

    sym = off & (g_t > 0)
    allowed = np.union1d(keys[sym], np.arange(n, dtype=np.int64) * (n + 1))
    support_ok = bool(np.all(np.isin(hkeys, allowed, assume_unique=True)))

    delta = Perturbation(H - csr)
    return delta, MHDiagnostics(rev, is_irreducible(G_hat), support_ok, G_hat)
