"""Time-decayed line graph (TDLG) adjacency construction and normalization.

For edges i, j with incidence columns b_i, b_j and times t_i, t_j::

    A[i, j] = (b_i . b_j) * exp(-(t_i - t_j)**2 / (2 * sigma_t**2))

Matrices are held as ``scipy.sparse.csr_matrix`` in canonical form: sorted
column indices, no duplicates, no stored zeros.
"""

from __future__ import annotations

import logging
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import IncidenceView, TemporalGraph, build_incidence

logger = logging.getLogger(__name__)

DEFAULT_SIGMA_RATIO = 0.1
DEFAULT_ENTRY_BUDGET = 200_000_000
# target number of candidate pairs materialized per expansion chunk
_CHUNK_PAIRS = 4_000_000


class EntryBudgetExceeded(MemoryError):
    pass


@dataclass(frozen=True)
class TdlgConfig:
    """Construction options.

    Set exactly one of ``sigma_t`` (absolute decay scale) or ``sigma_ratio``
    (scale relative to the population std of edge times). Leaving both unset
    means ``sigma_ratio=0.1``.
    """

    sigma_t: Optional[float] = None
    sigma_ratio: Optional[float] = None
    normalization: str = "none"
    weight_cutoff: Optional[float] = None
    keep_diagonal: bool = True
    decay: str = "gaussian"
    entry_budget: int = DEFAULT_ENTRY_BUDGET

    def __post_init__(self):
        if self.sigma_t is not None and self.sigma_ratio is not None:
            raise ValueError("set only one of sigma_t and sigma_ratio")
        if self.sigma_t is None and self.sigma_ratio is None:
            object.__setattr__(self, "sigma_ratio", DEFAULT_SIGMA_RATIO)
        for name in ("sigma_t", "sigma_ratio"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be > 0, got {val}")
        if self.normalization not in ("none", "spectral", "edge"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.decay not in ("gaussian", "laplacian"):
            raise ValueError(f"unknown decay {self.decay!r}")
        if self.weight_cutoff is not None and not 0 <= self.weight_cutoff < 2:
            raise ValueError("weight_cutoff must lie in [0, 2)")

    def resolve_sigma(self, times: np.ndarray) -> float:
        """Absolute sigma_t, scaling by the std of ``times`` in ratio mode."""
        if self.sigma_t is not None:
            return float(self.sigma_t)
        times = np.asarray(times, dtype=np.float64)
        if times.size < 2:
            raise ValueError("relative sigma needs at least 2 edge times")
        std = float(np.std(times))
        if std == 0.0:
            raise ValueError("edge times have zero variance; pass an absolute sigma_t")
        return self.sigma_ratio * std

    def to_dict(self) -> dict:
        return asdict(self)


def decay_weights(dt: np.ndarray, sigma_t: float, kind: str = "gaussian") -> np.ndarray:
    if not sigma_t > 0:
        raise ValueError(f"sigma_t must be > 0, got {sigma_t}")
    if kind == "gaussian":
        return np.exp(-(dt * dt) / (2.0 * sigma_t * sigma_t))
    if kind == "laplacian":
        return np.exp(-np.abs(dt) / sigma_t)
    raise ValueError(f"unknown decay {kind!r}")


def _n_workers() -> int:
    try:
        return max(1, int(os.environ.get("TDLG_THREADS", "1")))
    except ValueError:
        return 1


def _node_chunks(pair_counts: np.ndarray, target: int) -> list[tuple[int, int]]:
    """Split nodes into contiguous ranges holding about ``target`` pairs each."""
    csum = np.cumsum(pair_counts)
    chunks, start, done = [], 0, 0
    n = pair_counts.size
    while start < n:
        stop = int(np.searchsorted(csum, done + target, side="right"))
        stop = max(stop, start + 1)
        chunks.append((start, min(stop, n)))
        done = int(csum[min(stop, n) - 1])
        start = stop
    return chunks


def _expand_chunk(lo, hi, left: IncidenceView, right: IncidenceView, shape) -> sp.csr_matrix:
    """Shared-endpoint counts contributed by nodes ``lo..hi-1``.

    For each node, every (left edge, right edge) pair incident to it adds one
    unit; pairs sharing both endpoints therefore accumulate to 2.
    """
    dl = left.degrees[lo:hi]
    dr = right.degrees[lo:hi]
    npairs = dl * dr
    total = int(npairs.sum())
    if total == 0:
        return sp.csr_matrix(shape, dtype=np.float64)
    owner = np.repeat(np.arange(hi - lo), npairs)
    starts = np.zeros(hi - lo, dtype=np.int64)
    np.cumsum(npairs[:-1], out=starts[1:])
    local = np.arange(total, dtype=np.int64) - starts[owner]
    width = dr[owner]
    rows = left.indices[left.indptr[lo:hi][owner] + local // width]
    cols = right.indices[right.indptr[lo:hi][owner] + local % width]
    counts = sp.coo_matrix((np.ones(total, dtype=np.float64), (rows, cols)), shape=shape)
    return counts.tocsr()


def shared_endpoint_counts(left: IncidenceView, right: IncidenceView,
                           entry_budget: int = DEFAULT_ENTRY_BUDGET) -> sp.csr_matrix:
    """Sparse ``B_left^T B_right`` by per-node clique expansion.

    Counts are small integers, so chunk partial sums are exact and the result
    does not depend on chunking or worker count.
    """
    if left.n != right.n:
        raise ValueError("incidence views must share the node-id space")
    pair_counts = left.degrees * right.degrees
    total = int(pair_counts.sum())
    if total > entry_budget:
        hub = int(np.argmax(pair_counts))
        raise EntryBudgetExceeded(
            f"clique expansion needs {total} pair entries, over the budget of {entry_budget}; "
            f"largest hub is node {hub} with {int(pair_counts[hub])} pairs")
    shape = (left.m, right.m)
    chunks = _node_chunks(pair_counts, _CHUNK_PAIRS)
    workers = min(_n_workers(), len(chunks)) if chunks else 1
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda c: _expand_chunk(c[0], c[1], left, right, shape), chunks))
    else:
        parts = [_expand_chunk(lo, hi, left, right, shape) for lo, hi in chunks]
    if not parts:
        return sp.csr_matrix(shape, dtype=np.float64)
    parts = [p.tocoo() for p in parts]
    out = sp.coo_matrix(
        (np.concatenate([p.data for p in parts]),
         (np.concatenate([p.row for p in parts]), np.concatenate([p.col for p in parts]))),
        shape=shape).tocsr()
    out.sum_duplicates()
    out.sort_indices()
    return out


def _apply_decay(counts: sp.csr_matrix, t_rows, t_cols, sigma_t, cfg: TdlgConfig) -> sp.csr_matrix:
    counts = counts.tocsr(copy=True)
    rows = np.repeat(np.arange(counts.shape[0]), np.diff(counts.indptr))
    dt = t_rows[rows] - t_cols[counts.indices]
    counts.data = counts.data * decay_weights(dt, sigma_t, cfg.decay)
    if cfg.weight_cutoff is not None:
        counts.data[counts.data <= cfg.weight_cutoff] = 0.0
    # far-apart pairs can underflow to exactly zero
    counts.eliminate_zeros()
    counts.sort_indices()
    return counts


def build_tdlg(g: TemporalGraph, inc: Optional[IncidenceView] = None,
               cfg: Optional[TdlgConfig] = None, sigma_t: Optional[float] = None) -> sp.csr_matrix:
    """m x m TDLG adjacency of ``g``.

    ``sigma_t`` overrides the configured scale (used when the scale was
    resolved from a different edge set). Diagonal entries equal 2 unless
    ``cfg.keep_diagonal`` is false. ``cfg.normalization`` is applied last.
    """
    cfg = cfg or TdlgConfig()
    inc = inc if inc is not None else build_incidence(g)
    sigma = sigma_t if sigma_t is not None else cfg.resolve_sigma(g.t)
    if not sigma > 0:
        raise ValueError(f"sigma_t must be > 0, got {sigma}")
    counts = shared_endpoint_counts(inc, inc, cfg.entry_budget)
    A = _apply_decay(counts, g.t, g.t, sigma, cfg)
    if not cfg.keep_diagonal:
        A.setdiag(0.0)
        A.eliminate_zeros()
        A.sort_indices()
    if cfg.normalization != "none":
        A = normalize(A, cfg.normalization)
    return A


def build_cross_tdlg(train: TemporalGraph, test: TemporalGraph, cfg: Optional[TdlgConfig] = None,
                     sigma_t: Optional[float] = None,
                     train_inc: Optional[IncidenceView] = None) -> sp.csr_matrix:
    """m_test x m_train matrix of test-to-train TDLG weights.

    Row i is the feature vector of test edge i over the training edges. The
    decay scale is resolved from training times only.
    """
    cfg = cfg or TdlgConfig()
    if train.n != test.n:
        raise ValueError("train and test graphs must share the node-id space")
    sigma = sigma_t if sigma_t is not None else cfg.resolve_sigma(train.t)
    if not sigma > 0:
        raise ValueError(f"sigma_t must be > 0, got {sigma}")
    right = train_inc if train_inc is not None else build_incidence(train)
    counts = shared_endpoint_counts(build_incidence(test), right, cfg.entry_budget)
    return _apply_decay(counts, test.t, train.t, sigma, cfg)


def normalize(A: sp.spmatrix, scheme: str) -> sp.csr_matrix:
    """Degree normalization of a symmetric TDLG adjacency.

    ``spectral``: D^-1/2 A D^-1/2. ``edge``: (D^-1 A + A D^-1) / 2, whose
    entries sum to m. D holds the row sums of A.
    """
    A = sp.csr_matrix(A)
    deg = np.asarray(A.sum(axis=1)).ravel()
    bad = np.flatnonzero(deg <= 0)
    if bad.size:
        raise ValueError(f"row {int(bad[0])} of the adjacency sums to zero; cannot normalize")
    if scheme == "spectral":
        s = sp.diags(1.0 / np.sqrt(deg))
        out = s @ A @ s
    elif scheme == "edge":
        dinv = sp.diags(1.0 / deg)
        out = 0.5 * (dinv @ A + A @ dinv)
    else:
        raise ValueError(f"unknown normalization {scheme!r}")
    out = sp.csr_matrix(out)
    out.eliminate_zeros()
    out.sort_indices()
    return out


def is_symmetric(A: sp.spmatrix, atol: float = 1e-12) -> bool:
    A = sp.csr_matrix(A)
    if A.shape[0] != A.shape[1]:
        return False
    diff = (A - A.T).tocsr()
    return diff.nnz == 0 or float(np.abs(diff.data).max()) <= atol


def export_coo_text(A: sp.spmatrix, path) -> None:
    """Write ``i j w`` lines (0-based, row-major sorted)."""
    A = sp.csr_matrix(A)
    A.sort_indices()
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for i, j, w in zip(rows, A.indices, A.data):
            fh.write(f"{i} {j} {float(w)!r}\n")


def load_coo_text(path) -> sp.csr_matrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().lstrip("#").split()
        nr, nc, _ = (int(x) for x in header)
        body = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if body.size == 0:
        return sp.csr_matrix((nr, nc))
    out = sp.csr_matrix((body[:, 2], (body[:, 0].astype(np.int64), body[:, 1].astype(np.int64))),
                        shape=(nr, nc))
    out.sort_indices()
    return out


CSR_MAGIC = b"TDLGCSR1"


def export_csr_binary(A: sp.spmatrix, path) -> None:
    """Binary CSR dump, little-endian.

    Layout: 8-byte magic ``TDLGCSR1``; int64 rows, cols, nnz; int64 indptr
    (rows + 1); int64 column indices (nnz); float64 weights (nnz).
    """
    A = sp.csr_matrix(A)
    A.sort_indices()
    with open(path, "wb") as fh:
        fh.write(CSR_MAGIC)
        fh.write(struct.pack("<qqq", A.shape[0], A.shape[1], A.nnz))
        fh.write(A.indptr.astype("<i8").tobytes())
        fh.write(A.indices.astype("<i8").tobytes())
        fh.write(A.data.astype("<f8").tobytes())


def load_csr_binary(path) -> sp.csr_matrix:
    with open(path, "rb") as fh:
        if fh.read(8) != CSR_MAGIC:
            raise ValueError(f"{path} is not a TDLG CSR dump")
        nr, nc, nnz = struct.unpack("<qqq", fh.read(24))
        indptr = np.frombuffer(fh.read(8 * (nr + 1)), dtype="<i8")
        indices = np.frombuffer(fh.read(8 * nnz), dtype="<i8")
        data = np.frombuffer(fh.read(8 * nnz), dtype="<f8")
    return sp.csr_matrix((data.copy(), indices.copy(), indptr.copy()), shape=(nr, nc))
