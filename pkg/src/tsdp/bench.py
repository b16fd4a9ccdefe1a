"""Experiment grid over queue-like matrices: mean obj / spars / time per (method, k)."""
from __future__ import annotations

import numpy as np

from .data_io import gen_queue_matrix, quality_report, target_mix, target_power_step
from .errors import TSDPError
from .markov import stationary_distribution
from .pipeline import parse_method_label, run_method


def build_target(G, target: str, mu=None):
    if target == "power-step":
        return target_power_step(G).values
    if target.startswith("mix:"):
        mu = stationary_distribution(G) if mu is None else mu
        return target_mix(mu, float(target[4:])).values
    raise ValueError(f"unknown target {target!r}")


def run_grid(n: int, k_list, trials: int, methods, target: str = "power-step",
             seed: int = 0, backend: str = "tree") -> dict:
    """Run every method on ``trials`` random matrices per k.

    Failures are recorded per cell and never stop the run. Per trial the
    objective ordering MH >= S >= CG is checked whenever those methods are
    present; the MH part only where supp(G) is symmetric, which holds for
    queue matrices.
    """
    cells = {}
    order_violations = []
    for k in k_list:
        for t in range(trials):
            s = seed + 1000 * k + t
            try:
                G = gen_queue_matrix(n, k, s)
                mu = stationary_distribution(G)
                mu_hat = build_target(G, target, mu)
            except (TSDPError, ValueError) as exc:
                for label in methods:
                    cells.setdefault((label, k), _empty()).get("errors").append(str(exc))
                continue
            objs = {}
            for label in methods:
                cell = cells.setdefault((label, k), _empty())
                try:
                    method, kw = parse_method_label(label)
                    D, info = run_method(G, mu_hat, method, backend=backend, mu=mu, **kw)
                except (TSDPError, ValueError) as exc:
                    cell["errors"].append(f"trial {t}: {exc}")
                    continue
                rec = quality_report(G, D, mu_hat, method=label, time_ms=info["time_ms"])
                cell["obj"].append(rec["obj"])
                cell["spars"].append(rec["spars"])
                cell["time_ms"].append(rec["time_ms"])
                if "rounds" in info:
                    cell["rounds"].append(info["rounds"])
                is_s = method == "lp" and kw.get("omega") == "gplusi"
                objs["s" if is_s else label] = rec["obj"]
            order_violations += _check_order(objs, k, t)
    out = []
    for (label, k), c in cells.items():
        out.append({
            "method": label, "k": k, "trials": len(c["obj"]),
            "obj": _mean(c["obj"]), "spars": _mean(c["spars"]),
            "time_ms": _mean(c["time_ms"]),
            "rounds": _mean(c["rounds"]) if c["rounds"] else None,
            "errors": c["errors"],
        })
    return {"n": n, "k_list": list(k_list), "trials": trials, "methods": list(methods),
            "target": target, "seed": seed, "cells": out,
            "order_violations": order_violations}


def _empty():
    return {"obj": [], "spars": [], "time_ms": [], "rounds": [], "errors": []}


def _mean(v):
    return float(np.mean(v)) if v else None


def _check_order(objs: dict, k, t, tol=1e-9):
    pairs = []
    if "mh" in objs and "s" in objs:
        pairs.append((objs["mh"], objs["s"]))
    if "s" in objs:
        pairs += [(objs["s"], v) for key, v in objs.items() if key.startswith("cg")]
    if any(a < b - tol for a, b in pairs):
        return [{"k": k, "trial": t, "objs": dict(objs)}]
    return []


def format_table(result: dict) -> str:
    """Aligned text table: one row per method, one ``obj% / spars% / ms`` column per k."""
    ks = result["k_list"]
    methods = result["methods"]
    idx = {(c["method"], c["k"]): c for c in result["cells"]}
    head = ["method"] + [f"k={k}" for k in ks]
    rows = [head]
    for m in methods:
        row = [m]
        for k in ks:
            c = idx.get((m, k))
            if c is None or c["trials"] == 0:
                row.append("error" if c and c["errors"] else "-")
            else:
                row.append(f"{100 * c['obj']:.2f}% / {100 * c['spars']:.1f}% / {c['time_ms']:.0f}ms")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
