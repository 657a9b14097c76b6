import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from tdlg.graph import TemporalGraph, build_incidence
from tdlg.linegraph import (EntryBudgetExceeded, TdlgConfig, build_cross_tdlg, build_tdlg,
                            decay_weights, export_coo_text, export_csr_binary, is_symmetric,
                            load_coo_text, load_csr_binary, normalize, shared_endpoint_counts)

from oracles import dense_incidence, dense_tdlg


def random_graph(seed, n, m, integer_times=False):
    rng = np.random.default_rng(seed)
    u = rng.integers(0, n, m)
    v = (u + rng.integers(1, n, m)) % n
    t = rng.integers(0, 5, m).astype(float) if integer_times else rng.normal(0, 3, m)
    return TemporalGraph(n, u, v, t)


graphs = st.builds(random_graph, st.integers(0, 2**32 - 1), st.integers(2, 30),
                   st.integers(1, 200), st.booleans())
sigmas = st.floats(0.05, 20.0)


def path_graph():
    return TemporalGraph.from_edges([(0, 1, 0.0), (1, 2, 0.0), (2, 3, 1.0)])


def test_path_example():
    A = build_tdlg(path_graph(), cfg=TdlgConfig(sigma_t=1.0)).toarray()
    assert A[0, 1] == 1.0
    assert A[0, 2] == 0.0
    assert A[1, 2] == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert A[1, 2] == pytest.approx(0.60653, abs=1e-5)
    assert np.all(np.diag(A) == 2.0)


def test_parallel_edges_give_two():
    g = TemporalGraph.from_edges([(0, 1, 0.0), (0, 1, 0.0)])
    A = build_tdlg(g, cfg=TdlgConfig(sigma_t=1.0)).toarray()
    assert A[0, 1] == 2.0


def test_cross_example():
    train = TemporalGraph.from_edges([(0, 1, 0.0), (2, 3, 0.0)], n=5)
    test = TemporalGraph.from_edges([(1, 2, 1.0), (0, 4, 1.0)], n=5)
    X = build_cross_tdlg(train, test, TdlgConfig(sigma_t=1.0)).toarray()
    assert X.shape == (2, 2)
    assert X[0] == pytest.approx([0.60653, 0.60653], abs=1e-5)
    assert X[1, 0] == pytest.approx(0.60653, abs=1e-5) and X[1, 1] == 0.0
    disjoint = TemporalGraph.from_edges([(4, 3, 0.0)], n=5)
    X = build_cross_tdlg(TemporalGraph.from_edges([(0, 1, 0.0), (1, 2, 3.0)], n=5), disjoint,
                         TdlgConfig(sigma_t=1.0))
    assert X.shape == (1, 2) and X.nnz == 0


def test_sigma_resolution():
    g = TemporalGraph.from_edges([(0, 1, -1.0), (1, 2, 1.0)])
    assert TdlgConfig().resolve_sigma(g.t) == pytest.approx(0.1)
    assert TdlgConfig(sigma_ratio=2.0).resolve_sigma(g.t) == pytest.approx(2.0)
    flat = TemporalGraph.from_edges([(0, 1, 3.0), (1, 2, 3.0)])
    with pytest.raises(ValueError, match="zero variance"):
        build_tdlg(flat)
    assert build_tdlg(flat, cfg=TdlgConfig(sigma_t=1.0))[0, 1] == 1.0
    with pytest.raises(ValueError):
        TdlgConfig(sigma_t=1.0, sigma_ratio=0.1)
    with pytest.raises(ValueError):
        TdlgConfig(sigma_t=0.0)
    with pytest.raises(ValueError):
        build_tdlg(g, sigma_t=0.0)


def test_keep_diagonal_false_and_cutoff():
    g = path_graph()
    A = build_tdlg(g, cfg=TdlgConfig(sigma_t=1.0, keep_diagonal=False)).toarray()
    assert np.all(np.diag(A) == 0)
    C = build_tdlg(g, cfg=TdlgConfig(sigma_t=1.0, weight_cutoff=0.7)).toarray()
    assert C[1, 2] == 0.0 and C[0, 1] == 1.0


def test_laplacian_decay():
    w = decay_weights(np.array([0.0, 1.0, -2.0]), 2.0, "laplacian")
    assert w == pytest.approx(np.exp(-np.array([0.0, 0.5, 1.0])))


@settings(max_examples=60, deadline=None)
@given(graphs, sigmas)
def test_matches_dense_oracle(g, sigma):
    A = build_tdlg(g, cfg=TdlgConfig(sigma_t=sigma))
    ref = dense_tdlg(g.u, g.v, g.t, sigma)
    assert np.max(np.abs(A.toarray() - ref)) <= 1e-12
    # structural zeros absent, canonical rows
    assert np.all(A.data > 0)
    assert A.has_sorted_indices and A.has_canonical_format


@settings(max_examples=60, deadline=None)
@given(graphs, sigmas)
def test_symmetry_and_bounds(g, sigma):
    A = build_tdlg(g, cfg=TdlgConfig(sigma_t=sigma))
    assert is_symmetric(A, atol=1e-12)
    B = dense_incidence(g.n, g.u, g.v)
    counts = B.T @ B
    coo = A.tocoo()
    c = counts[coo.row, coo.col]
    assert np.all(coo.data > 0)
    assert np.all(coo.data <= c)
    same_t = g.t[coo.row] == g.t[coo.col]
    assert np.all(coo.data[same_t] == c[same_t])
    assert np.all(coo.data[~same_t] < c[~same_t])


@given(st.floats(0.01, 10.0), st.floats(0.0, 50.0), st.floats(1e-6, 50.0))
def test_decay_monotone(sigma, dt, extra):
    a, b = decay_weights(np.array([dt, dt + extra]), sigma)
    assert b < a or (a == 0.0 and b == 0.0)
    assert b <= a


@settings(max_examples=30, deadline=None)
@given(graphs)
def test_large_sigma_gives_line_graph(g):
    A = build_tdlg(g, cfg=TdlgConfig(sigma_t=1e9)).toarray()
    B = dense_incidence(g.n, g.u, g.v)
    assert np.allclose(A, B.T @ B, rtol=0, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(graphs, st.integers(0, 2**32 - 1))
def test_permutation_equivariance(g, seed):
    perm = np.random.default_rng(seed).permutation(g.m)
    A = build_tdlg(g, cfg=TdlgConfig(sigma_t=1.0))
    Ap = build_tdlg(g.subgraph(perm), cfg=TdlgConfig(sigma_t=1.0))
    assert (Ap != A[perm][:, perm]).nnz == 0


@settings(max_examples=30, deadline=None)
@given(graphs, sigmas, st.integers(0, 2**32 - 1))
def test_cross_matches_oracle(g, sigma, seed):
    rng = np.random.default_rng(seed)
    mask = rng.random(g.m) < 0.5
    if mask.all() or not mask.any():
        return
    train, test = g.subgraph(np.flatnonzero(mask)), g.subgraph(np.flatnonzero(~mask))
    X = build_cross_tdlg(train, test, TdlgConfig(sigma_t=sigma))
    ref = dense_tdlg(train.u, train.v, train.t, sigma, rows=(test.u, test.v, test.t))
    assert X.shape == (test.m, train.m)
    assert np.max(np.abs(X.toarray() - ref)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(graphs)
def test_cross_with_itself_equals_build(g):
    cfg = TdlgConfig(sigma_ratio=0.5) if np.std(g.t) > 0 else TdlgConfig(sigma_t=1.0)
    A = build_tdlg(g, cfg=cfg)
    X = build_cross_tdlg(g, g, cfg)
    assert (A != X).nnz == 0


def test_cross_sigma_from_training_times():
    train = TemporalGraph.from_edges([(0, 1, 0.0), (1, 2, 10.0)], n=4)
    test = TemporalGraph.from_edges([(1, 3, 1000.0), (0, 3, -1000.0)], n=4)
    X = build_cross_tdlg(train, test, TdlgConfig(sigma_ratio=1.0)).toarray()
    sigma = 5.0  # std of training times
    assert X[0, 0] == pytest.approx(math.exp(-(1000.0 ** 2) / (2 * sigma ** 2)))


def test_normalize_examples():
    A = sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    expect = np.array([[2 / 3, 1 / 3], [1 / 3, 2 / 3]])
    assert np.allclose(normalize(A, "spectral").toarray(), expect, atol=1e-15)
    assert np.allclose(normalize(A, "edge").toarray(), expect, atol=1e-15)
    with pytest.raises(ValueError, match="row 1"):
        normalize(sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]])), "edge")
    with pytest.raises(ValueError):
        normalize(A, "bogus")


@settings(max_examples=60, deadline=None)
@given(graphs, sigmas)
def test_normalization_properties(g, sigma):
    A = build_tdlg(g, cfg=TdlgConfig(sigma_t=sigma))
    E = normalize(A, "edge")
    assert abs(E.sum() - g.m) <= 1e-9
    assert is_symmetric(E, atol=1e-12)
    assert np.all(np.asarray(E.sum(axis=1)).ravel() >= 0.5 - 1e-12)
    S = normalize(A, "spectral")
    assert is_symmetric(S, atol=1e-12)
    ev = np.linalg.eigvalsh(S.toarray())
    assert ev.min() >= -1 - 1e-9 and ev.max() <= 1 + 1e-9
    N = build_tdlg(g, cfg=TdlgConfig(sigma_t=sigma, normalization="edge"))
    assert np.allclose(N.toarray(), E.toarray(), atol=0)


def test_export_round_trips(tmp_path):
    g = random_graph(5, 20, 60)
    A = build_tdlg(g, cfg=TdlgConfig(sigma_t=1.3))
    export_coo_text(A, tmp_path / "a.txt")
    lines = (tmp_path / "a.txt").read_text().splitlines()
    assert lines[0] == f"# {A.shape[0]} {A.shape[1]} {A.nnz}"
    keys = [tuple(map(int, ln.split()[:2])) for ln in lines[1:]]
    assert keys == sorted(keys)
    assert (load_coo_text(tmp_path / "a.txt") != A).nnz == 0
    export_csr_binary(A, tmp_path / "a.bin")
    B = load_csr_binary(tmp_path / "a.bin")
    assert (B != A).nnz == 0 and B.shape == A.shape
    raw = (tmp_path / "a.bin").read_bytes()
    assert raw[:8] == b"TDLGCSR1"
    assert len(raw) == 8 + 24 + 8 * (A.shape[0] + 1) + 16 * A.nnz


def test_worker_count_does_not_change_output(monkeypatch):
    import tdlg.linegraph as lg
    g = random_graph(11, 40, 800)
    monkeypatch.setattr(lg, "_CHUNK_PAIRS", 2000)
    monkeypatch.setenv("TDLG_THREADS", "1")
    A1 = build_tdlg(g, cfg=TdlgConfig(sigma_t=0.7))
    monkeypatch.setenv("TDLG_THREADS", "4")
    A4 = build_tdlg(g, cfg=TdlgConfig(sigma_t=0.7))
    for name in ("indptr", "indices", "data"):
        assert np.array_equal(getattr(A1, name), getattr(A4, name))
    assert np.max(np.abs(A1.toarray() - dense_tdlg(g.u, g.v, g.t, 0.7))) <= 1e-12


def test_entry_budget_guard():
    hub = TemporalGraph(101, np.zeros(100, int), np.arange(1, 101), np.zeros(100))
    inc = build_incidence(hub)
    with pytest.raises(EntryBudgetExceeded, match="budget"):
        shared_endpoint_counts(inc, inc, entry_budget=1000)
    with pytest.raises(EntryBudgetExceeded):
        build_tdlg(hub, cfg=TdlgConfig(sigma_t=1.0, entry_budget=1000))
    assert build_tdlg(hub, cfg=TdlgConfig(sigma_t=1.0)).nnz == 100 * 100
