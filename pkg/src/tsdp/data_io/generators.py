"""Synthetic queue-like matrices and target distributions.

Random numbers come from SplitMix64 (Steele, Lea and Flood 2014), used in
counter mode: draw number ``t`` (1-based) of seed ``s`` is the SplitMix64
finaliser applied to ``s + t * 0x9E3779B97F4A7C15 (mod 2**64)``, mapped to
the open interval (0, 1) as ``((z >> 11) + 0.5) / 2**53``. Draws are
consumed in row-major order of the nonzeros, so any language with 64-bit
unsigned arithmetic reproduces the matrices bit for bit.
"""
from __future__ import annotations

import numpy as np

from ..core import Distribution, SparseStochasticMatrix
from ..errors import BadArity, NonPositiveTarget, OutOfRange

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Outputs ``start+1 .. start+count`` of the SplitMix64 stream for ``seed``."""
    t = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed % 2**64) + t * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniform_open(seed: int, count: int, start: int = 0) -> np.ndarray:
    z = splitmix64(seed, count, start)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0**53


def gen_queue_matrix(n: int, k: int, seed: int = 0) -> SparseStochasticMatrix:
    """Band matrix linking each node to its k left and k right neighbours.

    No wraparound: the first and last k rows have fewer neighbours. The
    diagonal is empty, weights are uniform on (0, 1) before row
    normalisation, and ``nnz = 2nk - k(k+1)``.
    """
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n - 1):
        raise BadArity(f"k must lie in [1, n-1] = [1, {n - 1}], got {k}")
    offsets = np.concatenate([np.arange(-k, 0), np.arange(1, k + 1)])
    rows = np.repeat(np.arange(n, dtype=np.int64), offsets.size)
    cols = rows + np.tile(offsets, n)
    keep = (cols >= 0) & (cols < n)
    rows, cols = rows[keep], cols[keep]
    vals = uniform_open(seed, rows.size)
    sums = np.bincount(rows, weights=vals, minlength=n)
    vals = vals / sums[rows]
    return SparseStochasticMatrix.from_triples(n, rows, cols, vals)


def target_power_step(G: SparseStochasticMatrix) -> Distribution:
    """One power-iteration step from the uniform vector: ``Gᵀ 1 / n``."""
    v = G.csr.T @ np.full(G.n, 1.0 / G.n)
    if not np.all(v > 0):
        bad = int(np.flatnonzero(v <= 0)[0])
        raise NonPositiveTarget(f"column {bad} of G is empty; target would vanish there")
    return Distribution(v / v.sum())


def target_mix(mu, eps: float) -> Distribution:
    """``(1 - eps) mu + eps / n``."""
    if not 0.0 <= eps <= 1.0:
        raise OutOfRange(f"eps must lie in [0, 1], got {eps!r}")
    mu = np.asarray(mu, dtype=np.float64).ravel()
    v = (1.0 - eps) * mu + eps / mu.size
    return Distribution(v / v.sum())
