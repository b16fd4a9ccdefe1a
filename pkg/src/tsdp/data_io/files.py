"""Matrix Market and edge-list readers and writers (1-based on disk)."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..core import SparseStochasticMatrix, SupportSet, as_csr, csr_keys
from ..errors import DimensionMismatch, EmptyRow, ParseError, Reducible
from ..markov import strongly_connected_components

_FIELDS = {"real", "integer", "pattern"}


def _lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            yield lineno, line.rstrip("\n")


def read_matrix_market(path, *, stochastic: bool = False):
    """Read a coordinate Matrix Market file.

    Accepts ``real``, ``integer`` and ``pattern`` fields with ``general``
    symmetry; pattern entries read as 1.0. Duplicate coordinates are
    summed. With ``stochastic=True`` the result is validated and returned
    as a :class:`SparseStochasticMatrix`, otherwise as a CSR array.
    """
    it = _lines(path)
    try:
        lineno, header = next(it)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    tokens = header.split()
    if (len(tokens) != 5 or tokens[0] != "%%MatrixMarket"
            or tokens[1].lower() != "matrix" or tokens[2].lower() != "coordinate"
            or tokens[3].lower() not in _FIELDS or tokens[4].lower() != "general"):
        raise ParseError(
            "expected header '%%MatrixMarket matrix coordinate real general'", lineno)
    pattern = tokens[3].lower() == "pattern"

    shape = None
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        if shape is None:
            if len(parts) != 3:
                raise ParseError("size line must hold 'rows cols entries'", lineno)
            try:
                nr, nc, nnz = (int(t) for t in parts)
            except ValueError:
                raise ParseError(f"bad size line {s!r}", lineno) from None
            if nr < 0 or nc < 0 or nnz < 0:
                raise ParseError("negative size", lineno)
            shape = (nr, nc, nnz)
            continue
        want = 2 if pattern else 3
        if len(parts) != want:
            raise ParseError(f"expected {want} fields, got {len(parts)}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            v = 1.0 if pattern else float(parts[2])
        except ValueError:
            raise ParseError(f"bad entry {s!r}", lineno) from None
        if not (1 <= i <= shape[0] and 1 <= j <= shape[1]):
            raise ParseError(f"index ({i}, {j}) outside {shape[0]} x {shape[1]}", lineno)
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
    if shape is None:
        raise ParseError("missing size line", lineno)
    if len(vals) != shape[2]:
        raise ParseError(f"declared {shape[2]} entries, found {len(vals)}", lineno)
    M = sp.coo_array((np.asarray(vals, dtype=np.float64),
                      (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
                     shape=shape[:2]).tocsr()
    M.sum_duplicates()
    M.sort_indices()
    if stochastic:
        if shape[0] != shape[1]:
            raise DimensionMismatch(f"matrix is {shape[0]} x {shape[1]}, not square")
        return SparseStochasticMatrix(M)
    return M


def write_matrix_market(path, M, *, comment: str | None = None) -> None:
    """Write ``M`` in coordinate real general format with round-trip precision."""
    csr = as_csr(M)
    csr.eliminate_zeros()
    coo = csr.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{csr.shape[0]} {csr.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")


def read_support(path) -> SupportSet:
    """Support set stored as a Matrix Market file (any field; values ignored)."""
    M = read_matrix_market(path)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"support file is {M.shape[0]} x {M.shape[1]}, not square")
    return SupportSet.from_keys(M.shape[0], csr_keys(M))


def write_support(path, omega: SupportSet) -> None:
    n = omega.n
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate pattern general\n")
        fh.write(f"{n} {n} {len(omega)}\n")
        for i, j in omega:
            fh.write(f"{i + 1} {j + 1}\n")


def read_edge_list(path, weighted: bool = False, *, symmetrize: bool = False,
                   largest_scc: bool = False, return_nodes: bool = False):
    """Row-normalised transition matrix of a graph stored as an edge list.

    Lines hold ``i j`` or ``i j w`` (1-based; extra columns such as
    timestamps are ignored); lines starting with ``%`` are comments.
    Repeated edges accumulate weight, self loops are dropped.

    Parameters
    ----------
    weighted : bool
        Use the third column as the edge weight (default weight 1).
    symmetrize : bool
        Add every edge in both directions.
    largest_scc : bool
        Keep only the largest strongly connected component instead of
        failing on a reducible graph.
    return_nodes : bool
        Also return the original 0-based ids of the kept nodes.

    Raises
    ------
    EmptyRow
        A node has no outgoing edge (without ``largest_scc``).
    Reducible
        The graph is not strongly connected (without ``largest_scc``).
    """
    src, dst, wts = [], [], []
    n = 0
    for lineno, line in _lines(path):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        if len(parts) < 2 or (weighted and len(parts) < 3):
            raise ParseError(f"expected 'i j{' w' if weighted else ''}'", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if weighted else 1.0
        except ValueError:
            raise ParseError(f"bad edge {s!r}", lineno) from None
        if i < 1 or j < 1:
            raise ParseError(f"node ids are 1-based, got ({i}, {j})", lineno)
        if w < 0:
            raise ParseError(f"negative weight {w}", lineno)
        n = max(n, i, j)
        if i != j:
            src.append(i - 1)
            dst.append(j - 1)
            wts.append(w)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    wts = np.asarray(wts, dtype=np.float64)
    if symmetrize:
        src, dst, wts = np.concatenate([src, dst]), np.concatenate([dst, src]), np.concatenate([wts, wts])
    A = sp.coo_array((wts, (src, dst)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.eliminate_zeros()
    nodes = np.arange(n)
    if largest_scc:
        _, label = strongly_connected_components(A)
        sizes = np.bincount(label)
        keep = np.flatnonzero(label == int(np.argmax(sizes)))
        A = A[keep][:, keep]
        nodes = keep
        n = keep.size
    out = np.asarray(A.sum(axis=1)).ravel()
    empty = np.flatnonzero(out == 0)
    if empty.size:
        raise EmptyRow(int(nodes[empty[0]]))
    ncomp, _ = strongly_connected_components(A)
    if ncomp != 1:
        raise Reducible(f"graph has {ncomp} strongly connected components; "
                        "pass largest_scc to keep the largest")
    P = sp.diags_array(1.0 / out) @ A
    G = SparseStochasticMatrix(P)
    return (G, nodes) if return_nodes else G


def write_edge_list(path, G) -> None:
    """One ``i j w`` line per stored entry, 1-based, full precision."""
    coo = as_csr(G).tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("% i j weight\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")


def read_vector(path) -> np.ndarray:
    """Whitespace-separated floats, one or more per line; ``%`` starts a comment."""
    vals = []
    for lineno, line in _lines(path):
        s = line.split("%", 1)[0].strip()
        if not s:
            continue
        try:
            vals.extend(float(t) for t in s.split())
        except ValueError:
            raise ParseError(f"bad number in {s!r}", lineno) from None
    return np.asarray(vals, dtype=np.float64)


def write_vector(path, v) -> None:
    Path(path).write_text("".join(f"{float(x)!r}\n" for x in np.asarray(v).ravel()),
                          encoding="utf-8")
