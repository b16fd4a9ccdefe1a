"""Acceptance criteria 1-9.

Each test carries ``@pytest.mark.criterion(n)``; the terminal summary prints
one PASS/FAIL line per criterion together with the measured numbers. Soft
checks (trends, strictness rates) emit ``UserWarning`` and never fail.
"""
import itertools
import time
import tracemalloc
import warnings
from fractions import Fraction as F

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from tsdp import (ColGenOptions, SparseStochasticMatrix, SupportSet, alpha_of_c,
                  coherent_interval_check, column_generate, diagonal_solution, l1_norm,
                  lower_bound_l1, metropolis_hastings, rank_one_solution, rank_one_target,
                  ratio_bounds, solve_tsdp_lp, stationary_distribution, support,
                  unconstrained_rank_one_l1, upper_bound_l1)
from tsdp.data_io import gen_queue_matrix, target_power_step

import oracles
from conftest import (CYCLE, CYCLE_TARGET, RING, RING_TARGET, TILTED, TILTED_MU, TILTED_TARGET,
                      record)

EXACT = 1e-12
UNIFORM4 = [0.25] * 4


def _fr(v):
    return [F(x) for x in v]


def _close(x, exact, tol=EXACT):
    return abs(float(x) - float(exact)) <= tol


def _dense_close(A, exact_rows, tol=EXACT):
    return np.abs(np.asarray(A) - oracles.to_float(exact_rows)).max() <= tol


def _residuals(G, mu_hat, delta):
    """Sparse residuals computed without the package helpers."""
    D = sp.csr_array(delta.entries)
    H = (sp.csr_array(G.csr) + D).tocsr()
    mu_hat = np.asarray(mu_hat, dtype=float)
    rowsum = np.abs(D.sum(axis=1)).max(initial=0.0)
    stat = np.abs(H.T @ mu_hat - mu_hat).max()
    H.eliminate_zeros()
    return rowsum, stat, min(H.data.min(initial=0.0), 0.0), H


def _irreducible(H):
    A = sp.csr_array(H)
    A = sp.csr_array((A.data > 0, A.indices, A.indptr), shape=A.shape)
    return connected_components(A, directed=True, connection="strong")[0] == 1


# ---------------------------------------------------------------- criterion 1

def _worked_examples():
    """Everything criterion 1 needs, computed by the package."""
    ring = SparseStochasticMatrix.from_dense(RING)
    tilted = SparseStochasticMatrix.from_dense(TILTED)
    cycle = SparseStochasticMatrix.from_dense(CYCLE)
    out = {}
    b = ratio_bounds(UNIFORM4, RING_TARGET)
    out["ring_c"], out["ring_alpha"] = b.c_star, alpha_of_c(b, b.c_star)
    out["ring_diag"] = diagonal_solution(ring, UNIFORM4, RING_TARGET)
    out["ring_mh"] = metropolis_hastings(ring, RING_TARGET)
    out["ring_lp"] = solve_tsdp_lp(ring, RING_TARGET, SupportSet.full(4))[1].objective
    b = ratio_bounds(UNIFORM4, TILTED_MU)
    out["tilt_c"], out["tilt_alpha"] = b.c_star, alpha_of_c(b, b.c_star)
    out["tilt_rank1"] = rank_one_solution(ring, UNIFORM4, 0, 0.25)
    out["tilt_lp"] = solve_tsdp_lp(ring, TILTED_MU, SupportSet.full(4))[1].objective
    out["r1_target"] = rank_one_target(TILTED_MU, 1, 0.1).values
    out["r1"] = rank_one_solution(tilted, TILTED_MU, 1, 0.1)
    out["r1_free"] = unconstrained_rank_one_l1(tilted, TILTED_TARGET)
    out["r1_lp"] = solve_tsdp_lp(tilted, TILTED_TARGET, SupportSet.full(4))[1].objective
    out["cycle_mh"] = metropolis_hastings(cycle, CYCLE_TARGET)
    out["cycle_lp"] = solve_tsdp_lp(cycle, CYCLE_TARGET, SupportSet.full(3))
    return out


@pytest.fixture(scope="module")
def examples():
    return _worked_examples()


@pytest.mark.criterion(1)
def test_ring_example(examples):
    Gf = oracles.frac_matrix(RING)
    alpha, D = oracles.frac_diagonal_perturbation(Gf, _fr(UNIFORM4), _fr(RING_TARGET))
    H = oracles.frac_metropolis(Gf, _fr(RING_TARGET))
    mh_norm = oracles.frac_l1([[h - g for h, g in zip(rh, rg)] for rh, rg in zip(H, Gf)])
    assert alpha == [0, 0, F(1, 2), F(3, 4)] and oracles.frac_l1(D) == F(10, 8)
    assert mh_norm == F(7, 8)

    assert _close(examples["ring_c"], F(1, 2))
    assert np.abs(examples["ring_alpha"] - oracles.to_float([alpha])[0]).max() <= EXACT
    assert _dense_close(examples["ring_diag"].to_dense(), D)
    assert _close(l1_norm(examples["ring_diag"]), F(10, 8))
    mh_delta, diag = examples["ring_mh"]
    assert _dense_close(diag.G_hat.to_dense(), H)
    assert _close(l1_norm(mh_delta), mh_norm)
    assert _close(examples["ring_lp"], F(6, 8))
    record(1, f"ring: |D(a*)| = {l1_norm(examples['ring_diag']):.12g}, "
              f"MH = {l1_norm(mh_delta):.12g}, LP full = {examples['ring_lp']:.12g}")


@pytest.mark.criterion(1)
def test_rank_one_certified_example(examples):
    Gf = oracles.frac_matrix(RING)
    alpha, D = oracles.frac_diagonal_perturbation(Gf, _fr(UNIFORM4), _fr(TILTED_MU))
    assert alpha == [F(1, 2), 0, 0, 0]
    assert D[0] == [F(1, 4), F(-1, 8), 0, F(-1, 8)] and not any(any(r) for r in D[1:])
    assert _close(examples["tilt_c"], F(4, 5))
    assert np.abs(examples["tilt_alpha"] - [0.5, 0, 0, 0]).max() <= EXACT
    res = examples["tilt_rank1"]
    assert res.certified
    assert _dense_close(res.delta.to_dense(), D)
    # the certificate claims global optimality: the full LP must agree
    assert _close(examples["tilt_lp"], oracles.frac_l1(D))
    record(1, f"rank-one: c* = {examples['tilt_c']:.12g}, certified, "
              f"LP full = {examples['tilt_lp']:.12g}")


@pytest.mark.criterion(1)
def test_rank_one_uncertified_example(examples):
    Gf = oracles.frac_matrix(TILTED)
    target = [F(4, 11), F(3, 11), F(2, 11), F(2, 11)]
    _, D = oracles.frac_diagonal_perturbation(Gf, _fr(TILTED_MU), target)
    assert oracles.frac_l1(D) == F(1, 3)
    assert np.abs(examples["r1_target"] - oracles.to_float([target])[0]).max() <= EXACT
    res = examples["r1"]
    assert not res.certified
    assert _dense_close(res.delta.to_dense(), D)
    assert _close(l1_norm(res.delta), F(1, 3))
    assert _close(examples["r1_lp"], F(7, 24))
    record(1, f"rank-one lambda=1/10: |D(a*)| = {l1_norm(res.delta):.12g}, "
              f"LP full = {examples['r1_lp']:.12g}")


def _free_rank_one_exact():
    """Exact sign-free minimiser: all of mu_hat^T (I - G) in the heaviest row."""
    Gf = oracles.frac_matrix(TILTED)
    t = [F(4, 11), F(3, 11), F(2, 11), F(2, 11)]
    z = [sum(t[i] * ((i == j) - Gf[i][j]) for i in range(4)) for j in range(4)]
    i = max(range(4), key=lambda r: (t[r], -r))
    row = [zj / t[i] for zj in z]
    return i, row


@pytest.mark.criterion(1)
def test_sign_free_rank_one_flags_infeasibility(examples):
    i, row = _free_rank_one_exact()
    assert i == 0 and row == [F(-1, 16), F(1, 8), F(-1, 16), 0]
    delta, feasible = examples["r1_free"]
    assert not feasible
    assert _dense_close(delta.to_dense()[0:1], [row])
    exact = sum(abs(x) for x in row)
    assert exact == F(1, 4)
    assert _close(l1_norm(delta), exact)
    record(1, f"sign-free rank-one: norm = {l1_norm(delta):.12g} (exact 1/4), "
              f"infeasible flag set")


@pytest.mark.criterion(1)
def test_sign_free_rank_one_printed_norm(examples):
    """The printed value 11/40 for the sign-free minimiser.

    Unattainable: every sign-free minimiser has norm equal to the lower
    bound ``|mu_hatᵀ(I - G)|_1 / max mu_hat`` = 1/4 here (criterion 9), and
    the exact computation above gives 1/4. See notes/decisions.md.
    """
    delta, _ = examples["r1_free"]
    got = l1_norm(delta)
    record(1, f"printed sign-free norm 11/40 = 0.275 vs computed {got:.12g}")
    assert _close(got, F(11, 40))


@pytest.mark.criterion(1)
def test_cycle_example(examples):
    mh_delta, diag = examples["cycle_mh"]
    assert np.array_equal(diag.G_hat.to_dense(), np.eye(3))
    assert not diag.irreducible
    delta, sol = examples["cycle_lp"]
    assert _close(sol.objective, 1)
    # the printed optimum moves half of row 1 back onto itself
    printed = np.array([[0.5, -0.5, 0], [0, 0, 0], [0, 0, 0]])
    H = np.array(CYCLE) + printed
    assert np.abs(np.array(CYCLE_TARGET) @ H - CYCLE_TARGET).max() <= EXACT
    assert np.abs(printed).sum() == pytest.approx(sol.objective, abs=EXACT)
    rs, st, mn, _ = _residuals(SparseStochasticMatrix.from_dense(CYCLE), CYCLE_TARGET, delta)
    assert rs <= 1e-12 and st <= 1e-12 and mn >= -1e-12
    record(1, f"cycle: MH gives identity (reducible), LP full = {sol.objective:.12g}")


@pytest.mark.criterion(1)
def test_worked_examples_runtime(examples):
    t = time.perf_counter()
    _worked_examples()
    dt = time.perf_counter() - t
    record(1, f"all worked examples in {dt * 1e3:.1f} ms")
    assert dt < 1.0


# ---------------------------------------------------------------- criterion 2

CHAIN_GRID = [(n, k) for n in (20, 100, 500) for k in (1, 2, 5)]


def _chain(seed):
    n, k = CHAIN_GRID[seed % len(CHAIN_GRID)]
    G = gen_queue_matrix(n, k, 7000 + seed)
    mu_hat = target_power_step(G).values
    mu = stationary_distribution(G)
    lo = lower_bound_l1(G, mu_hat)
    hi = upper_bound_l1(G, ratio_bounds(mu, mu_hat))
    diag = l1_norm(diagonal_solution(G, mu, mu_hat))
    _, gs = solve_tsdp_lp(G, mu_hat, SupportSet.full(n))
    _, s = solve_tsdp_lp(G, mu_hat, support(G, True))
    cg = {d: column_generate(G, mu_hat, opts=ColGenOptions(delta=d))[1] for d in (0, 1e-4, 1e-2)}
    mh = l1_norm(metropolis_hastings(G, mu_hat)[0])
    return dict(n=n, k=k, lo=lo, gs=gs.objective, cg0=cg[0].objectives[-1],
                cg4=cg[1e-4].objectives[-1], cg2=cg[1e-2].objectives[-1],
                cg2_rounds=len(cg[1e-2].rounds), s=s.objective, diag=diag, hi=hi, mh=mh)


@pytest.fixture(scope="module")
def chain_runs():
    return [_chain(seed) for seed in range(50)]


def _le(a, b, rel=1e-9):
    return a <= b + rel * max(1.0, abs(b))


@pytest.mark.criterion(2)
def test_inequality_chain(chain_runs):
    bad = []
    for i, r in enumerate(chain_runs):
        chain = [r["lo"], r["cg0"], r["cg4"], r["cg2"], r["s"], r["diag"], r["hi"]]
        ok = all(_le(a, b) for a, b in zip(chain, chain[1:]))
        ok &= abs(r["cg0"] - r["gs"]) <= 1e-8 * max(1.0, r["gs"])
        ok &= _le(r["s"], r["mh"])   # queue matrices have symmetric support
        if not ok:
            bad.append((i, r))
    # the three-round observation concerns n in the hundreds and up; at n = 20
    # or 100 the absolute threshold delta * n is small and a few more rounds run
    slow = [r for r in chain_runs if r["n"] >= 500 and r["cg2_rounds"] > 3]
    if slow:
        warnings.warn(f"CG(1e-2) used more than 3 rounds on {len(slow)} instances with n >= 500")
    gap = max(abs(r["cg0"] - r["gs"]) / max(1.0, r["gs"]) for r in chain_runs)
    most = {n: max(r["cg2_rounds"] for r in chain_runs if r["n"] == n) for n in (20, 100, 500)}
    record(2, f"{len(chain_runs) - len(bad)}/{len(chain_runs)} instances satisfy the chain; "
              f"max |CG(0) - GS| rel = {gap:.2e}")
    record(2, "most CG(1e-2) rounds: " + ", ".join(f"n={n}: {m}" for n, m in most.items()))
    assert not bad, bad[:3]


# ---------------------------------------------------------------- criterion 3

def _feasibility_instances():
    for n, k in [(20, 1), (20, 5), (100, 2), (500, 1), (500, 5)]:
        G = gen_queue_matrix(n, k, n + k)
        yield f"queue n={n} k={k}", G, target_power_step(G).values, True
    rng = np.random.default_rng(2024)
    for t in range(8):
        n = int(rng.integers(3, 30))
        G = SparseStochasticMatrix.from_dense(oracles.random_irreducible(rng, n, 0.15))
        yield f"random n={n} #{t}", G, oracles.random_distribution(rng, n), False
    yield "ring", SparseStochasticMatrix.from_dense(RING), np.array(RING_TARGET), True


def _all_methods(G, mu_hat, symmetric):
    mu = stationary_distribution(G)
    yield "mh", metropolis_hastings(G, mu_hat)[0], symmetric, True
    yield "diag", diagonal_solution(G, mu, mu_hat), True, True
    yield "lp-gplusi", solve_tsdp_lp(G, mu_hat, support(G, True))[0], True, True
    yield "lp-full", solve_tsdp_lp(G, mu_hat, SupportSet.full(G.n))[0], True, True
    for d in (0, 1e-4, 1e-2):
        yield f"cg:{d}", column_generate(G, mu_hat, opts=ColGenOptions(delta=d))[0], True, True
    free, flag = unconstrained_rank_one_l1(G, mu_hat)
    yield "sign-free", free, False, flag


@pytest.mark.criterion(3)
def test_every_method_is_feasible():
    bad, count = [], 0
    for name, G, mu_hat, symmetric in _feasibility_instances():
        for method, delta, need_irr, need_sign in _all_methods(G, mu_hat, symmetric):
            rs, st, mn, H = _residuals(G, mu_hat, delta)
            ok = rs <= 1e-10 and st <= 1e-9
            if need_sign:
                ok &= mn >= -1e-10
            else:
                # the sign-free minimiser must report its own sign status truthfully
                ok &= mn < -1e-10 or method != "sign-free"
            if need_irr:
                ok &= _irreducible(H)
            count += 1
            if not ok:
                bad.append((name, method, rs, st, mn))
    # rank-one targets through the single-row formula
    rng = np.random.default_rng(5)
    for t in range(6):
        G = gen_queue_matrix(40, 2, t)
        mu = stationary_distribution(G)
        j, lam = int(rng.integers(40)), float(rng.uniform(0.01, 1))
        res = rank_one_solution(G, mu, j, lam)
        rs, st, mn, H = _residuals(G, rank_one_target(mu, j, lam).values, res.delta)
        count += 1
        if not (rs <= 1e-10 and st <= 1e-9 and mn >= -1e-10 and _irreducible(H)):
            bad.append(("rank-one", j, rs, st, mn))
    record(3, f"{count - len(bad)}/{count} perturbations pass all residual checks")
    assert not bad, bad[:5]


# ---------------------------------------------------------------- criterion 4

def _sparsity_bound(G, omega_mask):
    n = G.shape[0]
    return min(int(omega_mask.sum()), int(((G != 0) & omega_mask).sum()) + 2 * n)


@pytest.mark.criterion(4)
def test_sparsity_theorem():
    rng = np.random.default_rng(44)
    checked = strict_full = full = 0
    bad = []
    for t in range(120):
        n = int(rng.integers(3, 9)) if t < 100 else int(rng.integers(20, 60))
        Gd = oracles.random_irreducible(rng, n, float(rng.uniform(0.1, 0.6)))
        G = SparseStochasticMatrix.from_dense(Gd)
        mu_hat = oracles.random_distribution(rng, n)
        masks = {"full": np.ones((n, n), bool),
                 "gplusi": (Gd != 0) | np.eye(n, dtype=bool),
                 "extra": (Gd != 0) | np.eye(n, dtype=bool) | (rng.random((n, n)) < 0.3)}
        for label, mask in masks.items():
            delta, _ = solve_tsdp_lp(G, mu_hat, SupportSet.from_pairs(n, *np.nonzero(mask)))
            bound = _sparsity_bound(Gd, mask)
            nnz = int(np.count_nonzero(delta.to_dense()))
            checked += 1
            if nnz > bound:
                bad.append((t, label, nnz, bound))
            if label == "full":
                full += 1
                strict_full += nnz < bound
    for n, k in [(200, 1), (200, 2), (500, 5)]:
        G = gen_queue_matrix(n, k, 3)
        mu_hat = target_power_step(G).values
        for om in (support(G, True), SupportSet.full(n)):
            delta, _ = solve_tsdp_lp(G, mu_hat, om)
            mask = np.zeros((n, n), bool)
            mask[om.rows, om.cols] = True
            checked += 1
            if delta.nnz > _sparsity_bound(G.to_dense(), mask):
                bad.append((n, k, len(om), delta.nnz))
    rate = strict_full / full
    if rate < 0.9:
        warnings.warn(f"sparsity bound strict on only {rate:.0%} of full-support instances")
    record(4, f"bound holds on {checked - len(bad)}/{checked} LP solves; "
              f"strict on {rate:.0%} of {full} random full-support instances")
    assert not bad, bad[:5]


# ---------------------------------------------------------------- criterion 5

@pytest.mark.criterion(5)
def test_matches_dense_oracle():
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        Gd = oracles.random_irreducible(rng, n, float(rng.uniform(0.2, 0.8)))
        mu_hat = oracles.random_distribution(rng, n)
        ref, _ = oracles.dense_tsdp_lp(Gd, mu_hat)
        G = SparseStochasticMatrix.from_dense(Gd)
        for backend in ("tree", "lu"):
            _, sol = solve_tsdp_lp(G, mu_hat, SupportSet.full(n), backend=backend)
            worst = max(worst, abs(sol.objective - ref))
    record(5, f"100 instances x 2 backends, max |simplex - HiGHS| = {worst:.2e}")
    assert worst <= 1e-8


# ---------------------------------------------------------------- criterion 6

TREND_K = (1, 2, 5, 10, 50)


@pytest.mark.criterion(6)
def test_table_trends():
    n, trials = 500, 5
    d_obj, gs_spars, mh_spars = {}, {}, []
    for k in TREND_K:
        dv, gv = [], []
        for t in range(trials):
            G = gen_queue_matrix(n, k, 100 * k + t)
            mu_hat = target_power_step(G).values
            mu = stationary_distribution(G)
            base = len(support(G, True))
            dv.append(l1_norm(diagonal_solution(G, mu, mu_hat)) / n)
            gs, sol = solve_tsdp_lp(G, mu_hat, SupportSet.full(n))
            rs, st, mn, _ = _residuals(G, mu_hat, gs)
            assert rs <= 1e-10 and st <= 1e-9 and mn >= -1e-10
            gv.append(gs.nnz / base)
            mh_spars.append(metropolis_hastings(G, mu_hat)[0].nnz / base)
        d_obj[k], gs_spars[k] = float(np.mean(dv)), float(np.mean(gv))
    d_trend = all(d_obj[a] >= d_obj[b] for a, b in zip(TREND_K, TREND_K[1:]))
    gs_trend = all(gs_spars[a] >= gs_spars[b] for a, b in zip(TREND_K, TREND_K[1:]))
    mh_band = 0.5 <= min(mh_spars) and max(mh_spars) <= 0.65
    for ok, what in [(d_trend, "D objective does not decrease with k"),
                     (gs_trend, "GS sparsity does not decrease with k"),
                     (mh_band, "MH sparsity outside 50-65%")]:
        if not ok:
            warnings.warn(what)
    fmt = lambda d: ", ".join(f"k={k}: {100 * v:.1f}%" for k, v in d.items())  # noqa: E731
    record(6, f"D obj {fmt(d_obj)}")
    record(6, f"GS spars {fmt(gs_spars)}")
    record(6, f"MH spars {100 * min(mh_spars):.1f}%-{100 * max(mh_spars):.1f}%; "
              f"trends {'as expected' if d_trend and gs_trend and mh_band else 'deviate (warned)'}")


# ---------------------------------------------------------------- criterion 7

@pytest.mark.criterion(7)
@pytest.mark.slow
def test_restricted_lp_scales():
    G = gen_queue_matrix(10_000, 2, 0)
    mu_hat = target_power_step(G).values
    om = support(G, True)
    tracemalloc.start()
    t = time.perf_counter()
    delta, sol = solve_tsdp_lp(G, mu_hat, om)
    dt = time.perf_counter() - t
    peak = tracemalloc.get_traced_memory()[1]
    tracemalloc.stop()
    rs, st, mn, _ = _residuals(G, mu_hat, delta)
    per_nnz = peak / G.nnz
    record(7, f"n=10^4, k=2: {dt:.2f} s, peak traced memory {peak / 2**20:.1f} MiB "
              f"({per_nnz:.0f} B per nonzero of G)")
    assert dt < 60.0
    assert rs <= 1e-10 and st <= 1e-9 and mn >= -1e-10
    # a dense n x n array alone would need 800 MB
    assert per_nnz < 4096


# ---------------------------------------------------------------- criterion 8

@pytest.mark.criterion(8)
def test_sorted_pairing_interval():
    rng = np.random.default_rng(88)
    nested = exhaustive = 0
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        mu, mu_hat = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        full, srt = coherent_interval_check(mu, mu_hat)
        r = mu / mu_hat
        assert full == (r.min(), r.max())
        assert full[0] <= srt[0] and srt[1] <= full[1]
        nested += 1
        if n <= 5:
            lo, hi = oracles.pairing_extremes(mu, mu_hat)
            assert abs(srt[0] - lo) <= 1e-14 and abs(srt[1] - hi) <= 1e-14
            exhaustive += 1
    record(8, f"{nested} pairs nested; {exhaustive} matched the best pairing "
              f"over all permutations")


# ---------------------------------------------------------------- criterion 9

@pytest.mark.criterion(9)
def test_sign_free_attains_lower_bound():
    rng = np.random.default_rng(99)
    worst = 0.0
    for t in range(100):
        if t % 2:
            n = int(rng.integers(2, 40))
            Gd = oracles.random_irreducible(rng, n, float(rng.uniform(0.1, 0.7)))
            G = SparseStochasticMatrix.from_dense(Gd)
        else:
            n = int(rng.integers(3, 300))
            G = gen_queue_matrix(n, int(rng.integers(1, min(5, n - 1) + 1)), t)
            Gd = G.to_dense()
        mu_hat = rng.dirichlet(np.ones(n))
        delta, _ = unconstrained_rank_one_l1(G, mu_hat)
        # lower bound by hand: |mu_hatᵀ(I - G)|_1 / max mu_hat
        by_hand = np.abs(mu_hat - mu_hat @ Gd).sum() / mu_hat.max()
        got = l1_norm(delta)
        worst = max(worst, abs(got - lower_bound_l1(G, mu_hat)), abs(got - by_hand))
    record(9, f"100 instances, max |norm - lower bound| = {worst:.2e}")
    assert worst <= 1e-12


def test_permutation_oracle_self_check():
    # the exhaustive search itself must find the sorted pairing on a tiny case
    mu, mu_hat = np.array([0.1, 0.3, 0.6]), np.array([0.5, 0.2, 0.3])
    best = min(max(mu[list(p)] / mu_hat) for p in itertools.permutations(range(3)))
    assert oracles.pairing_extremes(mu, mu_hat)[1] == pytest.approx(best)
