"""Command line front end.

    tsdp gen    --n N --k K --seed S --out g.mtx
    tsdp solve  --g g.mtx --mu-hat power-step --method lp --omega full --out d.mtx
    tsdp check  --g g.mtx --delta-file d.mtx --mu-hat power-step
    tsdp bench  --n 200 --k-list 1,2,5 --trials 3 --methods mh,diag,lp-gplusi,cg:1e-4

Exit codes: 0 success, 1 domain error, 2 usage, 3 infeasible, 4 failed check.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import format_table, run_grid
from .closed_form import rank_one_target
from .core import Distribution, Perturbation, SparseStochasticMatrix, SupportSet, l1_norm
from .data_io import (gen_queue_matrix, quality_report, read_matrix_market, read_support,
                      read_vector, target_mix, target_power_step, to_json,
                      write_matrix_market)
from .errors import Infeasible, TSDPError
from .lp import lp_residuals, sparsity_bound
from .markov import stationary_distribution
from .pipeline import bounds_summary, resolve_omega, run_method

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_CHECK = 0, 1, 2, 3, 4

TOL_ROWSUM = 1e-10
TOL_STATIONARITY = 1e-9
TOL_SIGN = 1e-10


class UsageError(Exception):
    pass


def _emit(record: dict, path: str | None = None):
    text = to_json(record, indent=2)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def build_mu_hat(spec: str, G: SparseStochasticMatrix, mu=None) -> np.ndarray:
    """``power-step``, ``mix:EPS``, ``rankone:J,LAMBDA`` (J 1-based) or a vector file."""
    if spec == "power-step":
        return target_power_step(G).values
    if spec.startswith("mix:"):
        try:
            eps = float(spec[4:])
        except ValueError:
            raise UsageError(f"bad epsilon in {spec!r}") from None
        mu = stationary_distribution(G) if mu is None else mu
        return target_mix(mu, eps).values
    if spec.startswith("rankone:"):
        try:
            j, lam = spec[8:].split(",")
            j, lam = int(j), float(lam)
        except ValueError:
            raise UsageError(f"expected rankone:J,LAMBDA, got {spec!r}") from None
        mu = stationary_distribution(G) if mu is None else mu
        return rank_one_target(mu, j - 1, lam).values
    path = spec[5:] if spec.startswith("file:") else spec
    v = read_vector(path)
    if v.size != G.n:
        raise UsageError(f"target has {v.size} entries, G has n={G.n}")
    return Distribution(v).values


def _omega(spec: str, G) -> SupportSet:
    if spec.startswith("file:"):
        om = read_support(spec[5:])
        if om.n != G.n:
            raise UsageError(f"support file is for n={om.n}, G has n={G.n}")
        return om
    if spec not in ("gplusi", "full"):
        raise UsageError(f"--omega must be gplusi, full or file:PATH, got {spec!r}")
    return resolve_omega(spec, G)


def cmd_gen(args) -> int:
    G = gen_queue_matrix(args.n, args.k, args.seed)
    write_matrix_market(args.out, G, comment=f"queue matrix n={args.n} k={args.k} seed={args.seed}")
    _emit({"command": "gen", "n": args.n, "k": args.k, "seed": args.seed,
           "nnz": G.nnz, "out": args.out})
    return EXIT_OK


def cmd_solve(args) -> int:
    G = read_matrix_market(args.g, stochastic=True)
    mu = stationary_distribution(G)
    mu_hat = build_mu_hat(args.mu_hat, G, mu)
    if args.omega is None:
        # cg prices over every entry unless told otherwise
        args.omega = "full" if args.method == "cg" else "gplusi"
    omega = _omega(args.omega, G)
    flags = {"g": args.g, "mu_hat": args.mu_hat, "method": args.method, "omega": args.omega,
             "delta": args.delta, "backend": args.backend}
    base = {"command": "solve", "flags": flags, **bounds_summary(G, mu_hat, mu)}
    try:
        D, info = run_method(G, mu_hat, args.method, omega=omega, delta=args.delta,
                             backend=args.backend, mu=mu)
    except Infeasible as exc:
        _emit({**base, "status": "infeasible",
               "certificate": "phase-1 optimum is positive: no perturbation supported on "
                              "the given support reaches the target", "detail": str(exc)},
              args.report)
        return EXIT_INFEASIBLE
    rec = quality_report(G, D, mu_hat, method=args.method, time_ms=info.pop("time_ms"),
                         rounds=info.pop("rounds", None))
    rec.update(base)
    rec["l1"] = l1_norm(D)
    rec["nnz_delta"] = D.nnz
    rec["sparsity_bound"] = sparsity_bound(G, omega) if args.method in ("lp", "cg") else None
    rec.update(info)
    rec["status"] = "ok" if "warning" not in info else "warning"
    if args.out:
        write_matrix_market(args.out, D.entries, comment=f"perturbation method={args.method}")
        rec["out"] = args.out
    _emit(rec, args.report)
    if "warning" in info:
        print(f"warning: {info['warning']}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    G = read_matrix_market(args.g, stochastic=True)
    mu = stationary_distribution(G)
    mu_hat = build_mu_hat(args.mu_hat, G, mu)
    M = read_matrix_market(args.delta_file)
    if M.shape != (G.n, G.n):
        raise UsageError(f"perturbation is {M.shape[0]}x{M.shape[1]}, G is {G.n}x{G.n}")
    D = Perturbation(M, check=False)
    omega = _omega(args.omega, G)
    res = lp_residuals(G, mu_hat, D)
    bound = sparsity_bound(G, omega)
    lo_hi = bounds_summary(G, mu_hat, mu)
    l1 = l1_norm(D)
    checks = {
        "rowsum": res["rowsum"] <= TOL_ROWSUM,
        "stationarity": res["stationarity"] <= TOL_STATIONARITY,
        "nonnegative": res["min_entry"] >= -TOL_SIGN,
        "sparsity_bound": D.nnz <= bound,
        "above_lower_bound": l1 >= lo_hi["lower_bound"] * (1 - 1e-9) - 1e-12,
    }
    rec = {"command": "check", "flags": {"g": args.g, "delta_file": args.delta_file,
                                         "mu_hat": args.mu_hat, "omega": args.omega},
           "l1": l1, "nnz_delta": D.nnz, "sparsity_bound": bound,
           "residual_rowsum": res["rowsum"], "residual_stationarity": res["stationarity"],
           "min_entry": res["min_entry"], **lo_hi,
           "within_bounds": lo_hi["lower_bound"] - 1e-12 <= l1 <= lo_hi["upper_bound"] + 1e-12,
           "checks": checks, "passed": all(checks.values())}
    rec["failed"] = [k for k, ok in checks.items() if not ok]
    _emit(rec, args.report)
    return EXIT_OK if rec["passed"] else EXIT_CHECK


def cmd_bench(args) -> int:
    try:
        ks = [int(x) for x in args.k_list.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --k-list {args.k_list!r}") from None
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    target = args.target or (f"mix:{args.epsilon}" if args.epsilon is not None else "power-step")
    result = run_grid(args.n, ks, args.trials, methods, target=target, seed=args.seed,
                      backend=args.backend)
    result["command"] = "bench"
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(to_json(result, indent=2) + "\n")
    print(format_table(result))
    if result["order_violations"]:
        print(f"ordering violations: {len(result['order_violations'])}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsdp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a queue-like matrix")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="compute a perturbation reaching the target")
    s.add_argument("--g", required=True, help="Matrix Market file of G")
    s.add_argument("--mu-hat", required=True,
                   help="power-step | mix:EPS | rankone:J,LAMBDA | vector file")
    s.add_argument("--method", choices=["mh", "diag", "lp", "cg"], required=True)
    s.add_argument("--omega", help="gplusi | full | file:PATH (default gplusi, full for cg)")
    s.add_argument("--delta", type=float, default=1e-4, help="stopping threshold for cg")
    s.add_argument("--backend", choices=["tree", "lu"], default="tree")
    s.add_argument("--out", help="write the perturbation here (Matrix Market)")
    s.add_argument("--report", help="also write the JSON report here")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="verify a perturbation")
    c.add_argument("--g", required=True)
    c.add_argument("--delta-file", required=True)
    c.add_argument("--mu-hat", required=True)
    c.add_argument("--omega", default="full")
    c.add_argument("--report")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="run the experiment grid")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k-list", default="1,2,5")
    b.add_argument("--trials", type=int, default=3)
    b.add_argument("--methods", default="mh,diag,lp-gplusi,cg:1e-4")
    b.add_argument("--epsilon", type=float, help="target mix:EPS of the stationary vector")
    b.add_argument("--target", help="power-step or mix:EPS (overrides --epsilon)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--backend", choices=["tree", "lu"], default="tree")
    b.add_argument("--json", help="write the full result here")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tsdp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Infeasible as exc:
        print(f"tsdp: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (TSDPError, OSError) as exc:
        print(f"tsdp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
