"""
Building a time-decayed line graph
==================================

Each temporal edge becomes a node of the line graph. Two edges are linked
with weight (shared endpoints) * exp(-dt^2 / (2 sigma_t^2)).
"""

# %%
import tempfile
from pathlib import Path

import numpy as np

from tdlg import TdlgConfig, TemporalGraph, build_incidence, build_tdlg, normalize
from tdlg.embeddings import edge_embeddings
from tdlg.linegraph import export_coo_text, load_coo_text

# three edges on a path a-b-c-d; the last one happens a time unit later
g = TemporalGraph.from_edges([(0, 1, 0.0), (1, 2, 0.0), (2, 3, 1.0)])
inc = build_incidence(g)
print("edges at node 1:", inc[1])

A = build_tdlg(g, inc, TdlgConfig(sigma_t=1.0))
print(A.toarray())
# diagonal is 2: an edge shares both endpoints with itself

# %%
# Parallel edges share both endpoints, so they are linked with weight 2.
twin = TemporalGraph.from_edges([(0, 1, 0.0), (0, 1, 0.0)])
print(build_tdlg(twin, cfg=TdlgConfig(sigma_t=1.0)).toarray())

# %%
# By default sigma_t is a tenth of the std of all edge times.
rng = np.random.default_rng(0)
u = rng.integers(0, 50, 400)
big = TemporalGraph(50, u, (u + rng.integers(1, 50, 400)) % 50, rng.exponential(30.0, 400))
cfg = TdlgConfig()
print("sigma_t =", cfg.resolve_sigma(big.t))
A = build_tdlg(big, cfg=cfg)
print(f"{A.shape[0]} edges, {A.nnz} nonzeros, density {A.nnz / A.shape[0] ** 2:.3f}")

# %%
# Each row is a sparse edge embedding.
Y = edge_embeddings(A)
print("row 0 has", len(Y.row(0)), "nonzero features")

# %%
# The edge normalization keeps the total weight equal to the edge count.
E = normalize(A, "edge")
S = normalize(A, "spectral")
print("edge-normalized sum:", E.sum(), " m:", big.m)
print("spectral radius:", np.abs(np.linalg.eigvalsh(S.toarray())).max())

# %%
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "tdlg.txt"
    export_coo_text(A, path)
    print(path.read_text().splitlines()[:3])
    assert (load_coo_text(path) != A).nnz == 0
