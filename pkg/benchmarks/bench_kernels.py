#!/usr/bin/env python3
"""Time every compiled kernel against its pure Python fallback.

    python benchmarks/bench_kernels.py            # default sizes
    python benchmarks/bench_kernels.py --quick    # small sizes, a few seconds
    python benchmarks/bench_kernels.py --json out.json

Both paths run in one process through the per-call ``use_numba`` switches,
so the fallback timed here is the same code that ``TSDP_DISABLE_NUMBA=1``
selects. Each case checks that the two paths agree before timing. The
first compiled call is excluded (warm-up), compile time is reported apart.
"""
from __future__ import annotations

import argparse
import json
import platform
import time

import numpy as np

from tsdp import BackendOptions, SupportSet, build_lp, metropolis_hastings, price_entries, support
from tsdp import _accel, simplex
from tsdp.data_io import gen_queue_matrix, target_power_step
from tsdp.markov import _gth, strongly_connected_components


def _best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def case_scc(n):
    G = gen_queue_matrix(n, 2, 1)
    run = lambda flag: strongly_connected_components(G.csr, use_numba=flag)  # noqa: E731
    check = lambda a, b: a[0] == b[0]  # noqa: E731
    return f"strong components (n={n})", run, check


def case_pricing(n):
    rng = np.random.default_rng(0)
    y0, ymu = rng.normal(0.5, 0.5, n), rng.normal(2, 3, n)
    mu_hat = rng.dirichlet(np.ones(n))
    excl = np.unique(rng.integers(0, n * n, 5 * n))

    def run(flag):
        return price_entries(y0, ymu, mu_hat, excl, 5 * n, exhaustive=True, use_numba=flag)

    check = lambda a, b: np.array_equal(np.sort(a.keys), np.sort(b.keys))  # noqa: E731
    return f"exhaustive pricing (n={n})", run, check


def case_metropolis(n):
    G = gen_queue_matrix(n, 3, 2)
    mu_hat = target_power_step(G).values
    run = lambda flag: metropolis_hastings(G, mu_hat, use_numba=flag)[0]  # noqa: E731
    check = lambda a, b: abs(a.entries - b.entries).max() == 0  # noqa: E731
    return f"MH diagonal (n={n})", run, check


def case_gth(n):
    G = gen_queue_matrix(n, 2, 3)
    run = lambda flag: _gth(G.csr, use_numba=flag)  # noqa: E731
    check = lambda a, b: np.abs(a - b).max() <= 1e-15 * max(1.0, np.abs(a).max())  # noqa: E731
    return f"GTH elimination (n={n})", run, check


def case_tree(n):
    G = gen_queue_matrix(n, 2, 4)
    P = build_lp(G, target_power_step(G), support(G, True))

    def run(flag):
        return simplex.solve(P, opts=BackendOptions(use_numba=flag))

    check = lambda a, b: np.array_equal(a.primal, b.primal)  # noqa: E731
    return f"tree simplex S (n={n})", run, check


def case_tree_full(n):
    G = gen_queue_matrix(n, 2, 5)
    P = build_lp(G, target_power_step(G), SupportSet.full(n))

    def run(flag):
        return simplex.solve(P, opts=BackendOptions(use_numba=flag))

    check = lambda a, b: abs(a.objective - b.objective) <= 1e-12 * max(1.0, a.objective)  # noqa: E731
    return f"tree simplex GS (n={n})", run, check


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    if not _accel.USE_NUMBA:
        ap.error("numba is disabled or missing; nothing to compare")

    big = not args.quick
    cases = [
        case_scc(200_000 if big else 20_000),
        case_pricing(2_000 if big else 300),
        case_metropolis(200_000 if big else 20_000),
        case_gth(20_000 if big else 2_000),
        case_tree(3_000 if big else 500),
        case_tree_full(200 if big else 60),
    ]
    rows = []
    for name, run, check in cases:
        t = time.perf_counter()
        fast = run(True)
        first = time.perf_counter() - t
        t_fast, fast = _best_of(lambda: run(True), args.repeat)
        t_slow, slow = _best_of(lambda: run(False), max(1, args.repeat // 2))
        if not check(fast, slow):
            raise SystemExit(f"{name}: compiled and fallback results differ")
        rows.append({"kernel": name, "numba_s": t_fast, "python_s": t_slow,
                     "speedup": t_slow / t_fast if t_fast > 0 else float("inf"),
                     "first_call_s": first})

    w = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel'.ljust(w)}  {'numba':>10}  {'python':>10}  {'speedup':>8}  {'1st call':>9}")
    for r in rows:
        print(f"{r['kernel'].ljust(w)}  {r['numba_s']:>9.4f}s  {r['python_s']:>9.4f}s  "
              f"{r['speedup']:>7.1f}x  {r['first_call_s']:>8.3f}s")
    if args.json:
        meta = {"python": platform.python_version(), "machine": platform.machine(),
                "quick": args.quick, "repeat": args.repeat}
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"meta": meta, "results": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
