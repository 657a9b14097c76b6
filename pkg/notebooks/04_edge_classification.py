"""
Edge classification
===================

Rows of the TDLG built on all edges are the features; a class-balanced
logistic regression is trained on 70% of the labels and scored by AUC on
the rest. Set TDLG_DATA_DIR to run on a benchmark file.
"""

# %%
from _data import benchmark_or_synthetic

from tdlg import TdlgConfig
from tdlg.pipelines import SplitSpec, run_edge_classification

name, g = benchmark_or_synthetic()
print(f"{name}: n={g.n}, m={g.m}, positive fraction {g.labels.mean():.3f}")

# %%
sparse = run_edge_classification(g, TdlgConfig(), SplitSpec(trials=3))
print(sparse.to_table())

# %%
dense = run_edge_classification(g, TdlgConfig(), SplitSpec(trials=3), dense_k=32)
print(dense.to_table())
