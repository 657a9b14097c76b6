"""Dense spectral embeddings via restarted Lanczos with full reorthogonalization."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


def _orthogonalize(w, V, j):
    # two passes of classical Gram-Schmidt keep the basis orthonormal to ~eps
    Q = V[:, :j]
    for _ in range(2):
        w -= Q @ (Q.T @ w)
    return w


def lanczos_eigsh(A, k: int, ncv: Optional[int] = None, tol: float = 1e-6,
                  max_restarts: int = 300, seed: int = 0):
    """Eigenpairs of a symmetric operator with the ``k`` largest |eigenvalues|.

    Thick-restart Lanczos: the Krylov basis is grown to ``ncv`` vectors with
    full reorthogonalization, Rayleigh-Ritz is applied, and the best Ritz
    vectors are kept as the start of the next cycle. A pair counts as
    converged when ``||A v - lam v|| <= tol * ||A||``, with ``||A||``
    estimated by the largest |Ritz value| seen.

    Returns ``(vals, vecs, residuals)`` ordered by decreasing |eigenvalue|.
    Raises :class:`ConvergenceError` after ``max_restarts`` cycles.
    """
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    if ncv is None:
        ncv = max(2 * k + 1, k + 40)
    ncv = min(ncv, n)
    keep = min(max(k + (ncv - k) // 2, k), ncv - 1) if ncv < n else k
    matvec = (lambda x: A @ x) if not callable(A) else A
    rng = np.random.default_rng(seed)

    V = np.zeros((n, ncv))
    W = np.zeros((n, ncv))
    v = rng.standard_normal(n)
    V[:, 0] = v / np.linalg.norm(v)
    start = 0
    anorm = 0.0
    resid = np.full(k, np.inf)
    for cycle in range(max_restarts):
        for j in range(start, ncv):
            W[:, j] = matvec(V[:, j])
            if j + 1 == ncv:
                break
            f = _orthogonalize(W[:, j].copy(), V, j + 1)
            beta = np.linalg.norm(f)
            if beta <= 1e-12 * max(anorm, np.linalg.norm(W[:, j]), 1.0):
                # invariant subspace: continue from a fresh random direction
                f = _orthogonalize(rng.standard_normal(n), V, j + 1)
                beta = np.linalg.norm(f)
            V[:, j + 1] = f / beta

        H = V.T @ W
        H = 0.5 * (H + H.T)
        theta, Y = np.linalg.eigh(H)
        order = np.argsort(-np.abs(theta), kind="stable")
        theta, Y = theta[order], Y[:, order]
        anorm = max(anorm, float(np.abs(theta[0])))
        X = V @ Y[:, :k]
        R = W @ Y[:, :k] - X * theta[:k]
        resid = np.linalg.norm(R, axis=0)
        if np.all(resid <= tol * max(anorm, np.finfo(float).tiny)):
            logger.debug("lanczos converged after %d cycles", cycle + 1)
            return theta[:k], X, resid
        if ncv == n:
            # full basis: Ritz pairs are exact up to rounding
            return theta[:k], X, resid

        # thick restart: keep the leading Ritz vectors, continue from the
        # component of the last matvec outside the current basis
        f = _orthogonalize(W[:, ncv - 1].copy(), V, ncv)
        Vk = V @ Y[:, :keep]
        Wk = W @ Y[:, :keep]
        V[:, :keep] = Vk
        W[:, :keep] = Wk
        V[:, keep:] = 0.0
        W[:, keep:] = 0.0
        f = _orthogonalize(f, V, keep)
        beta = np.linalg.norm(f)
        if beta <= 1e-12 * anorm:
            f = _orthogonalize(rng.standard_normal(n), V, keep)
            beta = np.linalg.norm(f)
        V[:, keep] = f / beta
        start = keep
    raise ConvergenceError(
        f"lanczos did not converge in {max_restarts} restarts; "
        f"worst residual {resid.max():.3e} vs target {tol * anorm:.3e}", float(resid.max()))


def fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    vecs = np.array(vecs, dtype=np.float64, copy=True)
    if vecs.size == 0:
        return vecs
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def dense_embed(A, k: int = 128, scale: bool = True, tol: float = 1e-6, seed: int = 0,
                ncv: Optional[int] = None) -> np.ndarray:
    """m x k spectral embedding from the top-|eigenvalue| eigenvectors of ``A``.

    Columns are ordered by decreasing |eigenvalue|, sign-fixed, and (when
    ``scale``) multiplied by their eigenvalue.
    """
    if sp.issparse(A):
        A = sp.csr_matrix(A)
    vals, vecs, _ = lanczos_eigsh(A, k, ncv=ncv, tol=tol, seed=seed)
    vecs = fix_signs(vecs)
    return vecs * vals if scale else vecs


def dense_embed_with_values(A, k: int, tol: float = 1e-6, seed: int = 0):
    """Like :func:`dense_embed` with ``scale=False``, also returning eigenvalues."""
    vals, vecs, resid = lanczos_eigsh(sp.csr_matrix(A) if sp.issparse(A) else A, k, tol=tol, seed=seed)
    return vals, fix_signs(vecs), resid
