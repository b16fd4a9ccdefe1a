"""One entry point per solution method, with timing and diagnostics."""
from __future__ import annotations

import time

import numpy as np

from .closed_form import diagonal_solution, lower_bound_l1, ratio_bounds, upper_bound_l1
from .colgen import ColGenOptions, column_generate
from .core import SparseStochasticMatrix, SupportSet, support
from .lp import solve_tsdp_lp
from .markov import stationary_distribution
from .metropolis import metropolis_hastings

METHODS = ("mh", "diag", "lp", "cg")


def parse_method_label(label: str) -> tuple[str, dict]:
    """Benchmark labels: ``mh``, ``diag``, ``lp-gplusi``, ``lp-full`` (alias ``gs``), ``cg:<delta>``."""
    label = label.strip().lower()
    if label in ("mh", "diag"):
        return label, {}
    if label in ("lp", "lp-gplusi", "s"):
        return "lp", {"omega": "gplusi"}
    if label in ("lp-full", "gs"):
        return "lp", {"omega": "full"}
    if label.startswith("cg"):
        _, _, d = label.partition(":")
        return "cg", {"delta": float(d) if d else 1e-4}
    raise ValueError(f"unknown method label {label!r}")


def resolve_omega(spec, G: SparseStochasticMatrix) -> SupportSet:
    if isinstance(spec, SupportSet):
        return spec
    if spec in (None, "gplusi"):
        return support(G, include_diagonal=True)
    if spec == "full":
        return SupportSet.full(G.n)
    raise ValueError(f"unknown support spec {spec!r}")


def run_method(G: SparseStochasticMatrix, mu_hat, method: str, *, omega="gplusi",
               delta: float = 1e-4, backend: str = "tree", mu=None) -> tuple:
    """Run ``method`` and return ``(perturbation, info)``.

    ``info`` holds ``time_ms`` and method-specific entries: MH diagnostics,
    LP pivot counts, or the column-generation trace.
    """
    mu_hat = np.asarray(mu_hat, dtype=np.float64).ravel()
    info: dict = {}
    t0 = time.perf_counter()
    if method == "mh":
        D, diag = metropolis_hastings(G, mu_hat)
        info.update(reversibility_residual=diag.reversibility_residual,
                    irreducible=diag.irreducible, support_ok=diag.support_ok)
        if not diag.irreducible:
            info["warning"] = "result is reducible"
    elif method == "diag":
        mu = stationary_distribution(G) if mu is None else mu
        D = diagonal_solution(G, mu, mu_hat)
    elif method == "lp":
        om = resolve_omega(omega, G)
        D, sol = solve_tsdp_lp(G, mu_hat, om, backend=backend)
        info.update(pivots=sol.pivots, phase1_pivots=sol.phase1_pivots,
                    omega_size=len(om), lp_objective=sol.objective)
    elif method == "cg":
        om = SupportSet.full(G.n) if omega in (None, "gplusi") else resolve_omega(omega, G)
        D, trace = column_generate(G, mu_hat, om, ColGenOptions(delta=delta), backend=backend)
        info.update(rounds=len(trace.rounds), stop_reason=trace.status,
                    trace=trace.as_dicts(), obj0=trace.obj0, n_plus=trace.n_plus)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    info["time_ms"] = (time.perf_counter() - t0) * 1e3
    return D, info


def bounds_summary(G: SparseStochasticMatrix, mu_hat, mu=None) -> dict:
    """Lower and upper bounds on the optimal l1 norm, absolute and relative to n."""
    mu = stationary_distribution(G) if mu is None else mu
    lo = lower_bound_l1(G, mu_hat)
    hi = upper_bound_l1(G, ratio_bounds(mu, mu_hat))
    return {"lower_bound": lo, "upper_bound": hi,
            "lower_bound_rel": lo / G.n, "upper_bound_rel": hi / G.n}
