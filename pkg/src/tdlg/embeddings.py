"""Edge embeddings from TDLG rows and mean-edge node embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import IncidenceView


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row-per-edge or row-per-node feature matrix.

    ``data`` is a CSR matrix (sparse rows, no explicit zeros) or a 2-d
    ndarray (dense rows). ``role`` is ``"edge"`` or ``"node"``.
    """

    data: object
    role: str = "edge"

    def __post_init__(self):
        if self.role not in ("edge", "node"):
            raise ValueError(f"role must be 'edge' or 'node', got {self.role!r}")
        if sp.issparse(self.data):
            data = self.data if isinstance(self.data, sp.csr_matrix) else sp.csr_matrix(self.data)
            if data.nnz and not np.all(data.data != 0):
                data = data.copy()
                data.eliminate_zeros()
        else:
            data = np.atleast_2d(np.asarray(self.data, dtype=np.float64))
        object.__setattr__(self, "data", data)

    @property
    def sparse(self) -> bool:
        return sp.issparse(self.data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row(self, i: int) -> dict:
        """Row ``i`` as ``{column: value}`` over its nonzero entries."""
        if self.sparse:
            lo, hi = self.data.indptr[i], self.data.indptr[i + 1]
            return dict(zip(self.data.indices[lo:hi].tolist(), self.data.data[lo:hi].tolist()))
        r = self.data[i]
        nz = np.flatnonzero(r)
        return dict(zip(nz.tolist(), r[nz].tolist()))

    def toarray(self) -> np.ndarray:
        return self.data.toarray() if self.sparse else self.data


def edge_embeddings(A) -> EmbeddingMatrix:
    """Rows of a TDLG (or test-to-train cross) matrix as edge feature vectors.

    No copy is made when ``A`` is already CSR.
    """
    if sp.issparse(A):
        return EmbeddingMatrix(A if isinstance(A, sp.csr_matrix) else sp.csr_matrix(A), "edge")
    return EmbeddingMatrix(A, "edge")


def mean_incidence(inc: IncidenceView) -> sp.csr_matrix:
    """Row-normalized incidence matrix; rows of isolated nodes stay zero."""
    B = inc.matrix()
    deg = inc.degrees.astype(np.float64)
    scale = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return sp.csr_matrix(sp.diags(scale) @ B)


def mean_edge_node_embeddings(inc: IncidenceView, Y) -> EmbeddingMatrix:
    """Node embedding = mean of the embeddings of its incident edges.

    Dense in, dense out; sparse in, sparse out. Isolated nodes get zero rows.
    """
    data = Y.data if isinstance(Y, EmbeddingMatrix) else Y
    if data.shape[0] != inc.m:
        raise ValueError(f"expected {inc.m} edge rows, got {data.shape[0]}")
    X = mean_incidence(inc) @ data
    if sp.issparse(X):
        X = sp.csr_matrix(X)
        X.eliminate_zeros()
        X.sort_indices()
    else:
        X = np.asarray(X)
    return EmbeddingMatrix(X, "node")


def export_embeddings(emb: EmbeddingMatrix, path) -> None:
    """Dense rows as CSV; sparse rows as ``row col value`` triplets."""
    if emb.sparse:
        coo = emb.data.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", encoding="utf-8") as fh:
            for i, j, w in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{i} {j} {float(w)!r}\n")
    else:
        np.savetxt(path, emb.data, delimiter=",", fmt="%.17g")
