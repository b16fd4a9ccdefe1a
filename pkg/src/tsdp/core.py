"""Sparse stochastic matrices, distributions, support sets and perturbations.

All containers are immutable after construction and hold 0-based indices.
Index pairs ``(i, j)`` are packed into int64 keys ``i * n + j`` whenever a
set of pairs has to be sorted, intersected or searched.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, NegativeEntry, RowSumViolation

TOL_STOCH = 1e-12
TOL_FEAS = 1e-10


def as_csr(M) -> sp.csr_array:
    """Canonical float64 CSR copy of a dense array or any scipy sparse input."""
    if isinstance(M, SparseStochasticMatrix):
        return M.csr.copy()
    if isinstance(M, Perturbation):
        return M.entries.copy()
    if sp.issparse(M):
        out = sp.csr_array(M, dtype=np.float64, copy=True)
    else:
        arr = np.asarray(M, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d matrix, got shape {arr.shape}")
        out = sp.csr_array(arr)
    out.sum_duplicates()
    out.sort_indices()
    return out


def _square_n(M) -> int:
    rows, cols = M.shape
    if rows != cols:
        raise DimensionMismatch(f"matrix must be square, got {M.shape}")
    return rows


def pair_keys(rows, cols, n: int) -> np.ndarray:
    return np.asarray(rows, dtype=np.int64) * n + np.asarray(cols, dtype=np.int64)


def csr_keys(M: sp.csr_array) -> np.ndarray:
    """Row-major keys of the stored entries of a canonical CSR matrix."""
    n = M.shape[1]
    rows = np.repeat(np.arange(M.shape[0], dtype=np.int64), np.diff(M.indptr))
    return rows * n + M.indices.astype(np.int64)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    n: int
    row_deviation: np.ndarray
    bad_rows: tuple[int, ...]
    negative_entries: tuple[tuple[int, int, float], ...]
    explicit_zeros: int
    passed: bool

    def describe(self) -> str:
        if self.passed:
            return "stochastic"
        parts = []
        if self.bad_rows:
            worst = int(np.argmax(self.row_deviation))
            parts.append(
                f"{len(self.bad_rows)} row(s) off unit sum "
                f"(max deviation {self.row_deviation[worst]:.3e} at row {worst})"
            )
        if self.negative_entries:
            parts.append(f"{len(self.negative_entries)} negative entr(y/ies)")
        if self.explicit_zeros:
            parts.append(f"{self.explicit_zeros} explicit zero(s)")
        return "; ".join(parts)


def validate_stochastic(M, tol: float = TOL_STOCH) -> ValidationReport:
    """Check nonnegativity, unit row sums and zero-free storage of ``M``.

    Never raises on bad content; the report carries every violation found.
    """
    if sp.issparse(M):
        csr = sp.csr_array(M, dtype=np.float64, copy=True)
        # explicit zeros are counted before any canonicalisation
        explicit_zeros = int(np.count_nonzero(csr.data == 0.0))
        csr.sum_duplicates()
    else:
        csr = as_csr(M)
        explicit_zeros = 0
    n = _square_n(csr)
    sums = np.asarray(csr.sum(axis=1)).ravel()
    deviation = np.abs(sums - 1.0)
    bad_rows = tuple(int(i) for i in np.flatnonzero(deviation > tol))
    coo = csr.tocoo()
    neg = coo.data < 0
    negatives = tuple(
        (int(i), int(j), float(v))
        for i, j, v in zip(coo.row[neg], coo.col[neg], coo.data[neg])
    )
    passed = not bad_rows and not negatives and explicit_zeros == 0
    return ValidationReport(n, deviation, bad_rows, negatives, explicit_zeros, passed)


# ---------------------------------------------------------------------------
# containers


class SparseStochasticMatrix:
    """Row-oriented sparse nonnegative matrix with unit row sums.

    Explicit zeros are stripped on construction, so the stored pattern is
    exactly the mathematical support.
    """

    __slots__ = ("_csr",)

    def __init__(self, matrix, *, check: bool = True):
        csr = as_csr(matrix)
        _square_n(csr)
        csr.eliminate_zeros()
        if check:
            report = validate_stochastic(csr)
            if report.negative_entries:
                raise NegativeEntry(report.describe())
            if not report.passed:
                raise RowSumViolation(report.describe())
        self._csr = csr

    @classmethod
    def from_dense(cls, rows, **kw) -> "SparseStochasticMatrix":
        return cls(np.asarray(rows, dtype=np.float64), **kw)

    @classmethod
    def from_triples(cls, n, rows, cols, vals, **kw) -> "SparseStochasticMatrix":
        coo = sp.coo_array(
            (np.asarray(vals, dtype=np.float64), (np.asarray(rows), np.asarray(cols))),
            shape=(n, n),
        )
        return cls(coo, **kw)

    @property
    def csr(self) -> sp.csr_array:
        return self._csr

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def nnz(self) -> int:
        return int(self._csr.nnz)

    @property
    def shape(self):
        return self._csr.shape

    @property
    def rows(self) -> Iterator[list[tuple[int, float]]]:
        indptr, indices, data = self._csr.indptr, self._csr.indices, self._csr.data
        for i in range(self.n):
            lo, hi = indptr[i], indptr[i + 1]
            yield [(int(j), float(v)) for j, v in zip(indices[lo:hi], data[lo:hi])]

    def keys(self) -> np.ndarray:
        return csr_keys(self._csr)

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def __repr__(self):
        return f"SparseStochasticMatrix(n={self.n}, nnz={self.nnz})"


class Distribution:
    """Strictly positive probability vector."""

    __slots__ = ("_values",)

    def __init__(self, values, *, check: bool = True):
        v = np.array(values, dtype=np.float64).ravel()
        if check:
            if v.size == 0:
                raise DimensionMismatch("empty distribution")
            if not np.all(v > 0):
                raise NegativeEntry("distribution entries must be strictly positive")
            if abs(v.sum() - 1.0) > TOL_STOCH:
                raise RowSumViolation(f"distribution sums to {v.sum()!r}, not 1")
        v.flags.writeable = False
        self._values = v

    @classmethod
    def normalized(cls, values) -> "Distribution":
        v = np.asarray(values, dtype=np.float64).ravel()
        return cls(v / v.sum())

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls(np.full(n, 1.0 / n))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return self._values.size

    def __len__(self):
        return self._values.size

    def __array__(self, dtype=None, copy=None):
        return self._values if dtype is None else self._values.astype(dtype)

    def __getitem__(self, idx):
        return self._values[idx]

    def __repr__(self):
        return f"Distribution({np.array2string(self._values, precision=4)})"


class SupportKind(str, Enum):
    FULL = "full"
    GPLUSI = "gplusi"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class SupportSet:
    """A set of index pairs; ``FULL`` never materialises its n**2 pairs."""

    n: int
    kind: SupportKind
    keys: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind is SupportKind.FULL:
            return
        keys = np.unique(np.asarray(self.keys, dtype=np.int64))
        if keys.size and (keys[0] < 0 or keys[-1] >= self.n * self.n):
            raise DimensionMismatch("support pair outside [0, n) x [0, n)")
        keys.flags.writeable = False
        object.__setattr__(self, "keys", keys)

    @classmethod
    def full(cls, n: int) -> "SupportSet":
        return cls(n, SupportKind.FULL)

    @classmethod
    def from_pairs(cls, n: int, rows, cols, kind=SupportKind.EXPLICIT) -> "SupportSet":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size and (
            rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n
        ):
            raise DimensionMismatch("support pair outside [0, n) x [0, n)")
        return cls(n, SupportKind(kind), rows * n + cols)

    @classmethod
    def from_keys(cls, n: int, keys, kind=SupportKind.EXPLICIT) -> "SupportSet":
        return cls(n, SupportKind(kind), keys)

    @property
    def is_full(self) -> bool:
        return self.kind is SupportKind.FULL

    @property
    def rows(self) -> np.ndarray:
        return self._materialised() // self.n

    @property
    def cols(self) -> np.ndarray:
        return self._materialised() % self.n

    def _materialised(self) -> np.ndarray:
        if self.is_full:
            return np.arange(self.n * self.n, dtype=np.int64)
        return self.keys

    def __len__(self) -> int:
        return self.n * self.n if self.is_full else int(self.keys.size)

    def __contains__(self, pair) -> bool:
        i, j = pair
        if not (0 <= i < self.n and 0 <= j < self.n):
            return False
        if self.is_full:
            return True
        k = i * self.n + j
        pos = np.searchsorted(self.keys, k)
        return bool(pos < self.keys.size and self.keys[pos] == k)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        if self.is_full:
            n = self.n
            return ((i, j) for i in range(n) for j in range(n))
        n = self.n
        return ((int(k // n), int(k % n)) for k in self.keys)

    def contains_keys(self, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64)
        if self.is_full:
            return (keys >= 0) & (keys < self.n * self.n)
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, max(self.keys.size - 1, 0))
        if self.keys.size == 0:
            return np.zeros(keys.shape, dtype=bool)
        return self.keys[pos] == keys

    def intersect_keys(self, keys) -> np.ndarray:
        """Sorted keys of ``keys`` that lie in this set."""
        keys = np.unique(np.asarray(keys, dtype=np.int64))
        return keys[self.contains_keys(keys)]

    def union(self, other: "SupportSet") -> "SupportSet":
        if self.n != other.n:
            raise DimensionMismatch("support sets of different dimension")
        if self.is_full or other.is_full:
            return SupportSet.full(self.n)
        return SupportSet(self.n, SupportKind.EXPLICIT, np.union1d(self.keys, other.keys))

    def issuperset(self, other: "SupportSet") -> bool:
        if self.is_full:
            return True
        if other.is_full:
            return len(self) == self.n * self.n
        return bool(np.all(self.contains_keys(other.keys)))

    def __eq__(self, other):
        if not isinstance(other, SupportSet) or self.n != other.n:
            return NotImplemented
        if self.is_full or other.is_full:
            return len(self) == len(other)
        return np.array_equal(self.keys, other.keys)

    def __hash__(self):
        return hash((self.n, len(self)))


class Perturbation:
    """Sparse signed matrix with zero row sums.

    ``zero``, ``plus`` and ``minus`` optionally record the split
    ``entries = zero + plus - minus`` produced by the LP solvers.
    """

    __slots__ = ("entries", "zero", "plus", "minus", "omega")

    def __init__(self, entries, *, zero=None, plus=None, minus=None, omega=None,
                 check: bool = True, tol: float = TOL_FEAS):
        csr = as_csr(entries)
        _square_n(csr)
        csr.eliminate_zeros()
        self.entries = csr
        self.zero = None if zero is None else _stripped(zero)
        self.plus = None if plus is None else _stripped(plus)
        self.minus = None if minus is None else _stripped(minus)
        self.omega = omega
        if check:
            self._check(tol)

    def _check(self, tol):
        dev = self.row_sum_residual()
        if dev > tol:
            raise RowSumViolation(f"perturbation row sums deviate by {dev:.3e}")
        parts = (self.zero, self.plus, self.minus)
        if any(p is not None for p in parts):
            if any(p is None for p in parts):
                raise ValueError("decomposition needs all three parts")
            for p in parts:
                if p.shape != self.entries.shape or (p.data < 0).any():
                    raise ValueError("decomposition parts must be nonnegative and n x n")
            overlap = np.intersect1d(csr_keys(self.plus), csr_keys(self.minus))
            if overlap.size:
                raise ValueError("plus and minus parts share support")
            if self.omega is not None:
                for p in parts:
                    if not np.all(self.omega.contains_keys(csr_keys(p))):
                        raise ValueError("decomposition leaves the support set")

    @classmethod
    def zeros(cls, n: int) -> "Perturbation":
        return cls(sp.csr_array((n, n), dtype=np.float64))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def nnz(self) -> int:
        return int(self.entries.nnz)

    @property
    def has_decomposition(self) -> bool:
        return self.plus is not None

    def row_sum_residual(self) -> float:
        if self.entries.nnz == 0:
            return 0.0
        return float(np.abs(np.asarray(self.entries.sum(axis=1)).ravel()).max())

    def keys(self) -> np.ndarray:
        return csr_keys(self.entries)

    def to_dense(self) -> np.ndarray:
        return self.entries.toarray()

    def __repr__(self):
        return f"Perturbation(n={self.n}, nnz={self.nnz})"


def _stripped(M) -> sp.csr_array:
    csr = as_csr(M)
    csr.eliminate_zeros()
    return csr


# ---------------------------------------------------------------------------
# operations


def support(M, include_diagonal: bool = False) -> SupportSet:
    """supp(M), or supp(M + I) when ``include_diagonal`` is set."""
    csr = as_csr(M)
    n = _square_n(csr)
    csr.eliminate_zeros()
    keys = csr_keys(csr)
    if include_diagonal:
        diag = np.arange(n, dtype=np.int64) * (n + 1)
        return SupportSet(n, SupportKind.GPLUSI, np.union1d(keys, diag))
    return SupportSet(n, SupportKind.EXPLICIT, keys)


def l1_norm(M) -> float:
    """Component-wise l1 norm: the sum of absolute values of all entries."""
    if isinstance(M, Perturbation):
        M = M.entries
    elif isinstance(M, SparseStochasticMatrix):
        M = M.csr
    if sp.issparse(M):
        return float(np.abs(M.data).sum()) if M.nnz else 0.0
    return float(np.abs(np.asarray(M, dtype=np.float64)).sum())


def apply_perturbation(G: SparseStochasticMatrix, delta: Perturbation,
                       tol_feas: float = TOL_FEAS) -> SparseStochasticMatrix:
    """Return G + delta as a validated stochastic matrix.

    Entries with magnitude at most ``tol_feas`` are dropped and the affected
    rows rescaled to unit sum; anything below ``-tol_feas`` is an error.
    """
    if G.n != delta.n:
        raise DimensionMismatch(f"G is {G.n}x{G.n} but delta is {delta.n}x{delta.n}")
    if delta.row_sum_residual() > tol_feas:
        raise RowSumViolation("perturbation rows do not sum to zero")
    H = (G.csr + delta.entries).tocsr()
    H.sum_duplicates()
    H.sort_indices()
    if H.nnz and H.data.min() < -tol_feas:
        k = int(np.argmin(H.data))
        i = int(np.searchsorted(H.indptr, k, side="right") - 1)
        raise NegativeEntry(
            f"(G + delta)[{i}, {int(H.indices[k])}] = {H.data[k]:.3e} < -{tol_feas:g}"
        )
    rows = np.repeat(np.arange(G.n), np.diff(H.indptr))
    small = np.abs(H.data) <= tol_feas
    clamped = np.bincount(rows[small], weights=np.abs(H.data[small]), minlength=G.n)
    H.data[small] = 0.0
    H.eliminate_zeros()
    sums = np.asarray(H.sum(axis=1)).ravel()
    dev = np.abs(sums - 1.0)
    allowed = tol_feas + clamped + TOL_STOCH
    if np.any(dev > allowed):
        i = int(np.argmax(dev - allowed))
        raise RowSumViolation(f"row {i} of G + delta sums to {sums[i]!r}")
    need = dev > 0
    if need.any():
        scale = np.ones(G.n)
        scale[need] = 1.0 / sums[need]
        H.data *= np.repeat(scale, np.diff(H.indptr))
    return SparseStochasticMatrix(H)
