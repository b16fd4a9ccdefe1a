import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from tsdp import (SparseStochasticMatrix, StationaryOptions, is_irreducible,
                  stationary_distribution, strongly_connected_components, verify_stationary)
from tsdp.data_io import gen_queue_matrix
from tsdp.errors import NotIrreducible
from tsdp.markov import _gth

from conftest import RING_TARGET
from oracles import dense_stationary, random_irreducible, scc_count


def test_cycle_is_irreducible(cycle):
    assert is_irreducible(cycle)


def test_identity_is_reducible():
    I3 = SparseStochasticMatrix(sp.identity(3, format="csr"))
    assert not is_irreducible(I3)
    ncomp, label = strongly_connected_components(I3)
    assert ncomp == 3 and sorted(label) == [0, 1, 2]


@pytest.mark.parametrize("seed", range(20))
def test_scc_count_matches_csgraph(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 60))
    A = sp.random_array((n, n), density=float(rng.uniform(0.01, 0.1)), format="csr", rng=rng)
    ncomp, label = strongly_connected_components(A)
    assert ncomp == scc_count(A.toarray())
    # nodes share a label iff they are mutually reachable
    R = (np.linalg.matrix_power(np.eye(n) + (A.toarray() != 0), n) > 0)
    same = R & R.T
    assert np.array_equal(same, label[:, None] == label[None, :])


def test_irreducible_under_permutation(rng):
    G = gen_queue_matrix(40, 2, 3)
    p = rng.permutation(40)
    P = sp.csr_array((np.ones(40), (np.arange(40), p)), shape=(40, 40))
    assert is_irreducible(SparseStochasticMatrix(P @ G.csr @ P.T))


def test_ring_stationary(ring):
    mu = stationary_distribution(ring)
    assert np.abs(mu.values - 0.25).max() <= 1e-13


def test_tilted_stationary(tilted):
    mu = stationary_distribution(tilted)
    assert np.abs(mu.values - [0.4, 0.2, 0.2, 0.2]).max() <= 1e-12


def test_periodic_cycle_stationary(cycle):
    mu, rep = stationary_distribution(cycle, with_report=True)
    assert np.abs(mu.values - 1/3).max() <= 1e-15
    assert rep.converged


def test_reducible_rejected():
    with pytest.raises(NotIrreducible):
        stationary_distribution(SparseStochasticMatrix(sp.identity(3, format="csr")))


@pytest.mark.parametrize("seed", range(10))
def test_stationary_matches_eigenvector(seed):
    rng = np.random.default_rng(seed)
    G = random_irreducible(rng, int(rng.integers(3, 30)))
    mu = stationary_distribution(SparseStochasticMatrix.from_dense(G))
    assert np.abs(mu.values - dense_stationary(G)).max() <= 1e-10


@pytest.mark.parametrize("n,k", [(200, 1), (500, 2), (1000, 5)])
def test_generated_chains_reach_tolerance(n, k):
    G = gen_queue_matrix(n, k, 11)
    mu = stationary_distribution(G)
    assert verify_stationary(G, mu) <= max(1e-13, 1e-12 * n)


def test_direct_method():
    G = gen_queue_matrix(300, 1, 2)
    mu, rep = stationary_distribution(G, StationaryOptions(method="direct"), with_report=True)
    assert rep.method == "direct" and verify_stationary(G, mu) <= 1e-12


def test_fallback_warns_when_nothing_converges():
    G = gen_queue_matrix(50, 1, 0)
    opts = StationaryOptions(max_iters=1, tol=1e-300, fallback_iters=3, method="power")
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        mu, rep = stationary_distribution(G, opts, with_report=True)
    assert not rep.converged and rep.warning
    assert any(issubclass(x.category, RuntimeWarning) for x in w)
    assert abs(mu.values.sum() - 1) <= 1e-12 and mu.values.min() > 0


def test_verify_stationary_examples(ring):
    assert verify_stationary(ring, np.full(4, 0.25)) <= 1e-15
    assert verify_stationary(ring, RING_TARGET) > 0.1
    assert verify_stationary(sp.identity(3, format="csr"), [0.2, 0.3, 0.5]) == 0.0


def test_options_validation():
    with pytest.raises(ValueError):
        StationaryOptions(max_iters=0)
    with pytest.raises(ValueError):
        StationaryOptions(tol=0.0)


@pytest.mark.parametrize("seed", range(8))
def test_gth_matches_eigenvector(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 60))
    Gd = random_irreducible(rng, n, 0.2)
    G = SparseStochasticMatrix.from_dense(Gd)
    mu, rep = stationary_distribution(G, StationaryOptions(method="gth"), with_report=True)
    assert rep.method == "gth"
    assert np.abs(mu.values - dense_stationary(Gd)).max() <= 1e-13


def test_gth_kernels_agree():
    G = gen_queue_matrix(120, 3, 2)
    a = _gth(G.csr, use_numba=True)
    b = _gth(G.csr, use_numba=False)
    assert np.abs(a - b).max() <= 1e-15


def test_gth_keeps_tiny_entries_positive():
    # stationary entries span dozens of orders of magnitude here; power
    # iteration stalls and LU returns negative entries in the tail
    G = gen_queue_matrix(500, 1, 8)
    mu, rep = stationary_distribution(G, with_report=True)
    assert rep.converged and mu.values.min() > 0
    assert mu.values.max() / mu.values.min() > 1e20
    r = np.abs(G.csr.T @ mu.values - mu.values) / mu.values
    assert r.max() <= 1e-10


def test_gth_refuses_wide_bands(monkeypatch):
    import tsdp.markov as markov
    monkeypatch.setattr(markov, "GTH_MAX_BAND_CELLS", 10)
    with pytest.raises(ValueError):
        stationary_distribution(gen_queue_matrix(30, 2, 0), StationaryOptions(method="gth"))
