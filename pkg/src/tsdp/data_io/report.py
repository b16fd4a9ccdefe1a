"""Quality measures of a computed perturbation."""
from __future__ import annotations

import json

import numpy as np

from ..core import Perturbation, SparseStochasticMatrix, l1_norm, support


def quality_report(G: SparseStochasticMatrix, delta: Perturbation, mu_hat=None, *,
                   method: str = "", time_ms: float | None = None,
                   rounds: int | None = None, **extra) -> dict:
    """Relative objective, relative support size and feasibility residuals.

    ``obj = ‖Δ‖₁ / ‖G‖₁`` and ``spars = |supp(Δ)| / |supp(G + I)|``. The
    stationarity residual is ``‖μ̂ᵀ(G + Δ) − μ̂ᵀ‖∞`` and is only filled in
    when ``mu_hat`` is given.
    """
    norm_G = l1_norm(G)
    assert abs(norm_G - G.n) <= 1e-9 * G.n, "‖G‖₁ must equal n for stochastic G"
    D = delta.entries
    H = (G.csr + D).tocsr()
    rowsum = np.abs(np.asarray(D.sum(axis=1)).ravel())
    rec = {
        "n": G.n,
        "nnz_g": G.nnz,
        "method": method,
        "obj": l1_norm(delta) / norm_G,
        "spars": D.nnz / len(support(G, include_diagonal=True)),
        "residual_rowsum": float(rowsum.max()) if rowsum.size else 0.0,
        "residual_stationarity": None,
        "min_entry": float(H.data.min()) if H.nnz else 0.0,
        "time_ms": time_ms,
    }
    if mu_hat is not None:
        mu_hat = np.asarray(mu_hat, dtype=np.float64).ravel()
        rec["residual_stationarity"] = float(np.abs(H.T @ mu_hat - mu_hat).max())
    if rounds is not None:
        rec["rounds"] = rounds
    rec.update(extra)
    return rec


def to_json(record: dict, **kw) -> str:
    return json.dumps(record, default=_default, **kw)


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
