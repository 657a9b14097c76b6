import numpy as np
import pytest
import scipy.sparse as sp

from tdlg.eigen import ConvergenceError, dense_embed, dense_embed_with_values, fix_signs, lanczos_eigsh
from tdlg.graph import TemporalGraph
from tdlg.linegraph import TdlgConfig, build_tdlg


def sym(seed, m, density=0.1):
    rng = np.random.default_rng(seed)
    M = sp.random(m, m, density=density, random_state=rng).toarray()
    return M + M.T


def test_identity_like():
    A = sp.diags([2.0, 2.0, 2.0]).tocsr()
    vals, vecs, resid = lanczos_eigsh(A, 2)
    assert np.allclose(vals, 2.0)
    assert np.allclose(A @ vecs, 2.0 * vecs, atol=1e-10)
    assert np.allclose(vecs.T @ vecs, np.eye(2), atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_matches_dense_eigh(seed):
    A = sym(seed, 150)
    k = 12
    vals, vecs, resid = lanczos_eigsh(sp.csr_matrix(A), k, seed=seed)
    w, V = np.linalg.eigh(A)
    order = np.argsort(-np.abs(w), kind="stable")[:k]
    assert np.allclose(np.abs(vals), np.abs(w[order]), atol=1e-8)
    anorm = np.linalg.norm(A, 2)
    assert np.all(np.linalg.norm(A @ vecs - vecs * vals, axis=0) <= 1e-6 * anorm * 1.0001)
    assert np.all(resid <= 1e-6 * anorm * 1.0001)


def test_block_diagonal_support():
    rng = np.random.default_rng(0)
    B1 = sym(1, 60) + 10 * np.eye(60)
    B2 = sym(2, 40)
    A = sp.block_diag([B1, B2]).tocsr()
    vals, vecs, _ = lanczos_eigsh(A, 3)
    w, _ = np.linalg.eigh(A.toarray())
    assert np.allclose(np.sort(np.abs(vals)), np.sort(np.abs(w))[-3:], atol=1e-8)
    # the dominant pairs come from the shifted first block
    assert np.allclose(vecs[60:], 0, atol=1e-6)


def test_full_rank_reconstruction():
    A = sym(7, 40, density=0.3)
    vals, vecs, _ = lanczos_eigsh(sp.csr_matrix(A), 40)
    assert np.max(np.abs(vecs @ np.diag(vals) @ vecs.T - A)) <= 1e-6


def test_sign_convention_and_scaling():
    g = TemporalGraph.from_edges([(0, 1, 0.0), (1, 2, 0.3), (2, 3, 1.0), (3, 0, 2.0), (0, 2, 0.5)])
    A = build_tdlg(g, cfg=TdlgConfig(sigma_t=1.0))
    vals, vecs, _ = dense_embed_with_values(A, 3)
    idx = np.argmax(np.abs(vecs), axis=0)
    assert np.all(vecs[idx, np.arange(3)] > 0)
    Y = dense_embed(A, 3)
    assert np.allclose(Y, vecs * vals, atol=1e-9)
    assert np.allclose(dense_embed(A, 3, scale=False), vecs, atol=1e-9)
    assert np.all(np.diff(np.abs(vals)) <= 1e-12)


def test_deterministic():
    A = sp.csr_matrix(sym(3, 120))
    assert np.array_equal(dense_embed(A, 8, seed=4), dense_embed(A, 8, seed=4))


def test_fix_signs_flips():
    v = np.array([[0.1, -0.9], [-0.5, 0.2]])
    assert np.array_equal(fix_signs(v), np.array([[-0.1, 0.9], [0.5, -0.2]]))


def test_non_convergence_reports_residual():
    A = sp.csr_matrix(sym(9, 300))
    with pytest.raises(ConvergenceError) as err:
        lanczos_eigsh(A, 30, ncv=31, max_restarts=1)
    assert err.value.residual > 0
    assert "residual" in str(err.value)


def test_rejects_bad_k():
    with pytest.raises(ValueError):
        lanczos_eigsh(sp.identity(4, format="csr"), 5)
