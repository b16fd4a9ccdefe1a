"""Irreducibility, stationary distributions and stationarity residuals."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import reverse_cuthill_mckee

from ._accel import jit, resolve
from .core import Distribution, SparseStochasticMatrix, as_csr
from .errors import DimensionMismatch, NotIrreducible


@jit
def _tarjan_scc(indptr, indices, n):
    """Iterative Tarjan. Returns (number of components, label per node)."""
    index = np.full(n, -1, np.int64)
    low = np.zeros(n, np.int64)
    on_stack = np.zeros(n, np.bool_)
    label = np.full(n, -1, np.int64)
    stack = np.empty(n, np.int64)
    call_node = np.empty(n, np.int64)
    call_edge = np.empty(n, np.int64)
    sp_ = 0
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        depth = 0
        call_node[0] = root
        call_edge[0] = indptr[root]
        index[root] = counter
        low[root] = counter
        counter += 1
        stack[sp_] = root
        sp_ += 1
        on_stack[root] = True
        while depth >= 0:
            v = call_node[depth]
            e = call_edge[depth]
            if e < indptr[v + 1]:
                call_edge[depth] = e + 1
                w = indices[e]
                if index[w] == -1:
                    index[w] = counter
                    low[w] = counter
                    counter += 1
                    stack[sp_] = w
                    sp_ += 1
                    on_stack[w] = True
                    depth += 1
                    call_node[depth] = w
                    call_edge[depth] = indptr[w]
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            # v finished
            if low[v] == index[v]:
                while True:
                    sp_ -= 1
                    w = stack[sp_]
                    on_stack[w] = False
                    label[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
            depth -= 1
            if depth >= 0:
                u = call_node[depth]
                if low[v] < low[u]:
                    low[u] = low[v]
    return ncomp, label


def strongly_connected_components(M, use_numba: bool | None = None):
    """Component count and per-node labels of the directed graph supp(M)."""
    csr = as_csr(M)
    csr.eliminate_zeros()
    fn = _tarjan_scc if resolve(use_numba) else _tarjan_scc.py_func
    ncomp, label = fn(csr.indptr.astype(np.int64), csr.indices.astype(np.int64), csr.shape[0])
    return int(ncomp), label


def is_irreducible(G, use_numba: bool | None = None) -> bool:
    """True iff the directed graph on supp(G) is strongly connected."""
    n = G.shape[0]
    if n == 0:
        return False
    ncomp, _ = strongly_connected_components(G, use_numba)
    return ncomp == 1


@dataclass(frozen=True)
class StationaryOptions:
    max_iters: int = 10000
    tol: float = 1e-13
    fallback_iters: int = 100
    method: str = "auto"  # "auto", "power", "gth" or "direct"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.method not in ("auto", "power", "direct", "gth"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class StationaryReport:
    method: str
    iterations: int
    residual: float
    converged: bool
    warning: str | None = None


def verify_stationary(G, mu) -> float:
    """‖μᵀG − μᵀ‖₁."""
    csr = G.csr if isinstance(G, SparseStochasticMatrix) else as_csr(G)
    v = np.asarray(mu, dtype=np.float64).ravel()
    if csr.shape[0] != v.size:
        raise DimensionMismatch(f"matrix is {csr.shape[0]}x{csr.shape[0]}, vector has {v.size}")
    return float(np.abs(csr.T @ v - v).sum())


def _power(GT, x, iters, tol):
    res = np.inf
    for it in range(1, iters + 1):
        y = GT @ x
        y /= y.sum()
        res = float(np.abs(y - x).sum())
        assert y.min() > 0.0, "power iterate lost positivity"
        x = y
        if res <= tol:
            return x, it, res
    return x, iters, res


def _direct(csr):
    n = csr.shape[0]
    A = (sp.identity(n, format="csr") - csr).T.tolil()
    A[n - 1, :] = np.ones(n)
    b = np.zeros(n)
    b[n - 1] = 1.0
    x = spla.spsolve(A.tocsc(), b)
    return np.asarray(x).ravel()


GTH_MAX_BAND_CELLS = 20_000_000


@jit
def _gth_band(B, n, b):
    """Subtraction-free elimination on band storage ``B[i, j - i + b] = P[i, j]``."""
    for k in range(n - 1, 0, -1):
        lo = max(0, k - b)
        s = 0.0
        for j in range(lo, k):
            s += B[k, j - k + b]
        for i in range(lo, k):
            B[i, k - i + b] /= s
        for i in range(lo, k):
            f = B[i, k - i + b]
            if f == 0.0:
                continue
            for j in range(lo, k):
                B[i, j - i + b] += f * B[k, j - k + b]
    x = np.zeros(n)
    x[0] = 1.0
    for k in range(1, n):
        acc = 0.0
        for i in range(max(0, k - b), k):
            acc += x[i] * B[i, k - i + b]
        x[k] = acc
    return x


def _gth(csr, use_numba=None):
    """Stationary vector by GTH elimination after a bandwidth-reducing ordering.

    Returns None when the band would not fit in GTH_MAX_BAND_CELLS.
    """
    n = csr.shape[0]
    pattern = (csr + csr.T).tocsr()
    perm = reverse_cuthill_mckee(pattern, symmetric_mode=True).astype(np.int64)
    P = csr[perm][:, perm].tocoo()
    b = int(np.abs(P.row - P.col).max()) if P.nnz else 0
    if n * (2 * b + 1) > GTH_MAX_BAND_CELLS:
        return None
    B = np.zeros((n, 2 * b + 1))
    B[P.row, P.col - P.row + b] = P.data
    kern = _gth_band if resolve(use_numba) else _gth_band.py_func
    y = kern(B, n, b)
    x = np.empty(n)
    x[perm] = y
    return x


def stationary_distribution(G: SparseStochasticMatrix, opts: StationaryOptions | None = None,
                            *, with_report: bool = False):
    """Stationary distribution of an irreducible stochastic matrix.

    Parameters
    ----------
    G : SparseStochasticMatrix
        Irreducible transition matrix.
    opts : StationaryOptions, optional
        Iteration limits and residual tolerance.
    with_report : bool
        Also return a :class:`StationaryReport`.

    Returns
    -------
    Distribution or (Distribution, StationaryReport)

    Notes
    -----
    Power iteration on ``G.T`` from the uniform vector, renormalised in the
    1-norm every step. Periodic or badly conditioned chains never reach the
    tolerance; in ``auto`` mode those fall back first to GTH elimination
    (subtraction free, so tiny entries keep full relative accuracy) on a
    reverse Cuthill-McKee band, then to a sparse direct solve of
    ``mu (I - G) = 0, sum(mu) = 1``. If neither meets the tolerance the
    power iterate after ``fallback_iters`` further steps is returned with a
    warning.
    """
    opts = opts or StationaryOptions()
    if not is_irreducible(G):
        raise NotIrreducible("stationary distribution requires an irreducible matrix")
    csr = G.csr
    n = G.n
    GT = csr.T.tocsr()
    x0 = np.full(n, 1.0 / n)

    def finish(x, report):
        x = x / x.sum()
        dist = Distribution(x, check=False)
        return (dist, report) if with_report else dist

    if opts.method == "gth":
        y = _gth(csr)
        if y is None:
            raise ValueError("matrix bandwidth too large for GTH elimination")
        y = y / y.sum()
        return finish(y, StationaryReport("gth", 0, verify_stationary(csr, y), True))

    if opts.method == "direct":
        x = _direct(csr)
        return finish(x, StationaryReport("direct", 0, verify_stationary(csr, x / x.sum()), True))

    x, it, res = _power(GT, x0, opts.max_iters, opts.tol)
    if res <= opts.tol:
        return finish(x, StationaryReport("power", it, verify_stationary(csr, x), True))

    if opts.method == "auto":
        y = _gth(csr)
        if y is not None and np.all(np.isfinite(y)) and y.min() > 0:
            y = y / y.sum()
            r = verify_stationary(csr, y)
            if r <= max(opts.tol, 1e-12 * n):
                return finish(y, StationaryReport("gth", it, r, True))
        try:
            y = _direct(csr)
            if np.all(np.isfinite(y)) and y.min() > 0:
                y = y / y.sum()
                r = verify_stationary(csr, y)
                if r <= max(opts.tol, 1e-12 * n):
                    return finish(y, StationaryReport("direct", it, r, True))
        except (RuntimeError, ValueError, np.linalg.LinAlgError):
            pass

    x, extra, _ = _power(GT, x, opts.fallback_iters, 0.0)
    msg = f"power iteration did not reach tol={opts.tol:g} in {opts.max_iters} iterations"
    warnings.warn(msg, RuntimeWarning, stacklevel=2)
    r = verify_stationary(csr, x / x.sum())
    return finish(x, StationaryReport("power-fallback", it + extra, r, False, msg))
