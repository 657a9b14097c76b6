"""Two-community, two-period temporal stochastic block model (TSBM).

Nodes ``0 .. n/2-1`` form community U and ``n/2 .. n-1`` community V. Each
period p contributes ``delta * n / 2`` edges: ``alpha_p * delta * n / 4``
inside U, as many inside V, and the rest across. Edge times in period p are
drawn from N(mu_p, sigma_p^2).

Edges are tagged by block, in generation order::

    0 (UU,1)  1 (VV,1)  2 (UV,1)  3 (UU,2)  4 (VV,2)  5 (UV,2)
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, asdict

import numpy as np
import scipy.sparse as sp

from .eigen import dense_embed
from .embeddings import mean_edge_node_embeddings
from .graph import TemporalGraph, build_incidence
from .learn import auc, predict_scores, train_logreg
from .linegraph import TdlgConfig, build_tdlg

logger = logging.getLogger(__name__)

BLOCK_NAMES = ("UU1", "VV1", "UV1", "UU2", "VV2", "UV2")
# column order of the expected node-embedding blocks
NODE_BLOCK_NAMES = ("UU1", "UU2", "VV1", "VV2", "UV1", "UV2")
_NODE_BLOCK_TAGS = (0, 3, 1, 4, 2, 5)
TOPOLOGY = np.array([[8.0, 0.0, 4.0],
                     [0.0, 8.0, 4.0],
                     [4.0, 4.0, 4.0]])


@dataclass(frozen=True)
class TsbmParams:
    n: int = 100
    delta: int = 40
    alpha1: float = 0.9
    alpha2: float = 0.1
    mu1: float = -1.0
    mu2: float = 1.0
    sigma1: float = 0.5
    sigma2: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise ValueError(f"n must be even and >= 4, got {self.n}")
        if int(self.delta) != self.delta or self.delta <= 0:
            raise ValueError(f"delta must be a positive integer, got {self.delta}")
        for a in (self.alpha1, self.alpha2):
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha must lie in [0, 1], got {a}")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("period time std-devs must be >= 0")

    def alphas(self):
        return (self.alpha1, self.alpha2)

    def to_dict(self) -> dict:
        return asdict(self)


def block_counts(p: TsbmParams) -> np.ndarray:
    """Integer edge counts per tag, after rounding with a residual check."""
    per_period = p.delta * p.n // 2
    out = []
    for a in p.alphas():
        exact = np.array([a * p.delta * p.n / 4, a * p.delta * p.n / 4, (1 - a) * p.delta * p.n / 2])
        rounded = np.rint(exact)
        residual = float(np.abs(rounded - exact).sum())
        if residual > 0.5 or int(rounded.sum()) != per_period:
            raise ValueError(
                f"alpha={a} gives non-integer block sizes {exact.tolist()} (residual {residual:.3f})")
        out.extend(int(x) for x in rounded)
    return np.array(out, dtype=np.int64)


def block_sizes(p: TsbmParams) -> np.ndarray:
    """Exact (unrounded) edge-set sizes in tag order."""
    a1, a2 = p.alphas()
    dn = p.delta * p.n
    return np.array([a1 * dn / 4, a1 * dn / 4, (1 - a1) * dn / 2,
                     a2 * dn / 4, a2 * dn / 4, (1 - a2) * dn / 2])


def _distinct_pairs(rng, lo, size, count):
    a = rng.integers(lo, lo + size, count)
    # offset in [1, size) guarantees a distinct second endpoint, uniformly
    b = lo + (a - lo + rng.integers(1, size, count)) % size
    return a, b


def generate_tsbm(p: TsbmParams):
    """Sample a TSBM graph; returns ``(graph, tags)``."""
    counts = block_counts(p)
    rng = np.random.default_rng(p.seed)
    half = p.n // 2
    us, vs, ts, tags = [], [], [], []
    for period, (mu, sigma) in enumerate(((p.mu1, p.sigma1), (p.mu2, p.sigma2))):
        c_uu, c_vv, c_uv = counts[3 * period:3 * period + 3]
        a, b = _distinct_pairs(rng, 0, half, c_uu)
        us.append(a), vs.append(b)
        a, b = _distinct_pairs(rng, half, half, c_vv)
        us.append(a), vs.append(b)
        us.append(rng.integers(0, half, c_uv))
        vs.append(rng.integers(half, p.n, c_uv))
        total = c_uu + c_vv + c_uv
        ts.append(mu + sigma * rng.standard_normal(total) if sigma > 0 else np.full(total, float(mu)))
        tags.append(np.repeat(np.arange(3 * period, 3 * period + 3), [c_uu, c_vv, c_uv]))
    g = TemporalGraph(p.n, np.concatenate(us), np.concatenate(vs), np.concatenate(ts))
    return g, np.concatenate(tags)


def gamma(p: TsbmParams, sigma_t: float) -> float:
    """Cross-period decay factor exp(-(mu1 - mu2)^2 / (2 sigma_t^2))."""
    if not sigma_t > 0:
        raise ValueError("sigma_t must be > 0")
    return math.exp(-((p.mu1 - p.mu2) ** 2) / (2.0 * sigma_t ** 2))


def expected_adj_blocks(p: TsbmParams, sigma_t: float) -> np.ndarray:
    """6 x 6 expected TDLG entry per pair of edge sets, in tag order.

    The value for (topology a, period i) x (topology b, period j) is
    ``TOPOLOGY[a, b] / n`` times 1 when i == j and gamma otherwise, i.e. the
    Kronecker product of the topology and period factors with rows permuted
    to period-major order. Assumes zero within-period time variance.
    """
    g = gamma(p, sigma_t)
    period = np.array([[1.0, g], [g, 1.0]])
    kron = np.kron(TOPOLOGY / p.n, period)  # topology-major order
    perm = [0, 2, 4, 1, 3, 5]  # tag index -> kron index
    return kron[np.ix_(perm, perm)]


def expected_node_emb_blocks(p: TsbmParams, sigma_t: float) -> np.ndarray:
    """2 x 6 expected mean-edge node embedding entries (rows u in U, v in V).

    Columns follow ``NODE_BLOCK_NAMES``: (U'xU')1, (U'xU')2, (V'xV')1,
    (V'xV')2, (U'xV')1, (U'xV')2, where primes exclude the node itself.
    """
    g = gamma(p, sigma_t)
    a1, a2 = p.alphas()
    row_u = [a1 + g * a2, a2 + g * a1, (1 - a1) + g * (1 - a2), (1 - a2) + g * (1 - a1),
             0.5 * (1 + g), 0.5 * (1 + g)]
    row_v = [row_u[2], row_u[3], row_u[0], row_u[1], row_u[4], row_u[5]]
    return (2.0 / p.n) * np.array([row_u, row_v])


def adjacency_cell_means(A: sp.spmatrix, tags: np.ndarray, exclude_diagonal: bool = True):
    """Mean entry of ``A`` within each (tag, tag) cell, zeros included.

    Returns ``(means, pair_counts)``; cells with no pairs have mean NaN.
    Self-pairs i == j are left out when ``exclude_diagonal``.
    """
    A = sp.coo_matrix(A)
    keep = A.row != A.col if exclude_diagonal else np.ones(A.nnz, dtype=bool)
    cell = tags[A.row[keep]] * 6 + tags[A.col[keep]]
    sums = np.bincount(cell, weights=A.data[keep], minlength=36).reshape(6, 6)
    size = np.bincount(tags, minlength=6).astype(np.float64)
    pairs = np.outer(size, size)
    if exclude_diagonal:
        pairs -= np.diag(size)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(pairs > 0, sums / np.where(pairs > 0, pairs, 1), np.nan)
    return means, pairs


def node_embedding_cell_means(g: TemporalGraph, A: sp.spmatrix, tags: np.ndarray, n_half: int):
    """Mean-edge node embedding entries averaged per (community, block) cell.

    For node x, only columns of edges not incident to x are used, matching
    the primed edge sets of the analytic result. Node rows are divided by the
    realized degree. Returns a 2 x 6 array in ``NODE_BLOCK_NAMES`` order.
    """
    A = sp.coo_matrix(A)
    deg = np.bincount(np.concatenate([g.u, g.v]), minlength=g.n).astype(np.float64)
    sums = np.zeros(g.n * 6)
    i, j, w = A.row, A.col, A.data
    for end in (g.u, g.v):
        x = end[i]
        ok = (x != g.u[j]) & (x != g.v[j])
        sums += np.bincount(x[ok] * 6 + tags[j[ok]], weights=w[ok], minlength=g.n * 6)
    sums = sums.reshape(g.n, 6)
    # edges of each block incident to x are excluded from that node's average
    inc_counts = np.zeros((g.n, 6))
    np.add.at(inc_counts, (g.u, tags), 1.0)
    np.add.at(inc_counts, (g.v, tags), 1.0)
    size = np.bincount(tags, minlength=6).astype(np.float64)
    avail = size[None, :] - inc_counts
    with np.errstate(invalid="ignore", divide="ignore"):
        per_node = np.where(avail > 0, sums / np.where(avail > 0, avail, 1), np.nan)
        per_node = per_node / np.where(deg > 0, deg, np.nan)[:, None]
    comm = np.arange(g.n) >= n_half
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN cells stay NaN
        out = np.vstack([np.nanmean(per_node[~comm], axis=0), np.nanmean(per_node[comm], axis=0)])
    return out[:, list(_NODE_BLOCK_TAGS)]


def _relative(emp, ana):
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.abs(emp - ana) / np.abs(ana)
    rel[ana == 0] = np.nan
    return rel


def verify_theory(p: TsbmParams, sigma_t: float, trials: int = 20) -> dict:
    """Monte Carlo comparison of sampled TDLGs with the analytic block values.

    Trial ``k`` samples with seed ``p.seed + k``. Each cell reports the
    empirical mean over trials, the analytic value, and the relative
    deviation; empty cells are reported as ``None`` ("N/A").
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if p.sigma1 != 0 or p.sigma2 != 0:
        raise ValueError("the analytic values assume sigma1 = sigma2 = 0")
    cfg = TdlgConfig(sigma_t=sigma_t)
    adj_sum = np.zeros((6, 6))
    node_sum = np.zeros((2, 6))
    adj_ok = np.zeros((6, 6))
    node_ok = np.zeros((2, 6))
    for k in range(trials):
        pk = TsbmParams(**{**p.to_dict(), "seed": p.seed + k})
        g, tags = generate_tsbm(pk)
        A = build_tdlg(g, build_incidence(g), cfg)
        means, _ = adjacency_cell_means(A, tags)
        nmeans = node_embedding_cell_means(g, A, tags, p.n // 2)
        adj_ok += np.isfinite(means)
        node_ok += np.isfinite(nmeans)
        adj_sum += np.nan_to_num(means)
        node_sum += np.nan_to_num(nmeans)
    with np.errstate(invalid="ignore", divide="ignore"):
        adj_emp = np.where(adj_ok > 0, adj_sum / adj_ok, np.nan)
        node_emp = np.where(node_ok > 0, node_sum / node_ok, np.nan)
    adj_ana = expected_adj_blocks(p, sigma_t)
    node_ana = expected_node_emb_blocks(p, sigma_t)
    adj_rel = _relative(adj_emp, adj_ana)
    node_rel = _relative(node_emp, node_ana)

    def cells(emp, ana, rel, rows, cols):
        out = []
        for a, ra in enumerate(rows):
            for b, cb in enumerate(cols):
                e = emp[a, b]
                out.append({
                    "row": ra, "col": cb,
                    "empirical": None if not np.isfinite(e) else float(e),
                    "analytic": float(ana[a, b]),
                    "abs_dev": None if not np.isfinite(e) else float(abs(e - ana[a, b])),
                    "rel_dev": None if not np.isfinite(rel[a, b]) else float(rel[a, b]),
                })
        return out

    return {
        "params": p.to_dict(),
        "sigma_t": sigma_t,
        "trials": trials,
        "gamma": gamma(p, sigma_t),
        "block_sizes": block_sizes(p).tolist(),
        "adjacency": cells(adj_emp, adj_ana, adj_rel, BLOCK_NAMES, BLOCK_NAMES),
        "node_embedding": cells(node_emp, node_ana, node_rel, ("u", "v"), NODE_BLOCK_NAMES),
        "max_rel_dev_adjacency": float(np.nanmax(adj_rel)) if np.isfinite(adj_rel).any() else None,
        "max_rel_dev_node_embedding": float(np.nanmax(node_rel)) if np.isfinite(node_rel).any() else None,
    }


def node_features(p: TsbmParams, sigma_t: float, eigvecs=(1, 2)) -> np.ndarray:
    """Standardized mean-edge node embeddings from selected TDLG eigenvectors.

    ``eigvecs`` indexes the eigenpairs ordered by decreasing |eigenvalue|.
    The leading one is skipped by default: it mostly tracks degree, and block
    edge counts are fixed, so degree carries no transferable community signal.
    """
    g, _ = generate_tsbm(p)
    inc = build_incidence(g)
    A = build_tdlg(g, inc, TdlgConfig(sigma_t=sigma_t))
    Y = dense_embed(A, k=max(eigvecs) + 1, seed=p.seed)[:, list(eigvecs)]
    X = mean_edge_node_embeddings(inc, Y).toarray()
    sd = X.std(axis=0)
    return (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


def community_separability(p: TsbmParams, sigma_t: float, eigvecs=(1, 2), folds: int = 5,
                           repeats: int = 5) -> dict:
    """How well a linear classifier tells U from V on TDLG node embeddings.

    ``train_accuracy`` is the in-sample accuracy of a balanced logistic
    regression fit on all nodes. ``cv_auc`` is the held-out AUC averaged over
    ``repeats`` stratified ``folds``-fold splits.
    """
    X = node_features(p, sigma_t, eigvecs)
    half = p.n // 2
    y = (np.arange(p.n) >= half).astype(np.float64)
    model = train_logreg(X, y)
    acc = float(((predict_scores(model, X) > 0.5) == y).mean())
    rng = np.random.default_rng([p.seed, 1])
    aucs = []
    for _ in range(repeats):
        fold = np.concatenate([rng.permutation(half) % folds, rng.permutation(p.n - half) % folds])
        for f in range(folds):
            test = fold == f
            m = train_logreg(X[~test], y[~test])
            aucs.append(auc(predict_scores(m, X[test]), y[test]))
    return {"train_accuracy": acc, "cv_auc": float(np.mean(aucs)), "gamma": gamma(p, sigma_t)}


def write_graph(g: TemporalGraph, tags, path, tag_path=None) -> None:
    """Edge list ``u,v,t`` plus a sidecar with one block name per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for a, b, t in zip(g.u, g.v, g.t):
            fh.write(f"{a},{b},{float(t)!r}\n")
    if tag_path is not None:
        with open(tag_path, "w", encoding="utf-8") as fh:
            fh.writelines(BLOCK_NAMES[k] + "\n" for k in tags)


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
