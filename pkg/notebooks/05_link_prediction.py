"""
Temporal link prediction
========================

Negatives come from shuffling the u, v and t columns independently. Time
is cut into 20 equal intervals: the first 19 are early, the last is late.
The classifier sees only training edges; test rows hold their TDLG weights
to those training edges.
"""

# %%
import numpy as np
from _data import benchmark_or_synthetic

from tdlg import TdlgConfig
from tdlg.pipelines import SplitSpec, interval_index, run_link_prediction_settings, sample_negative_edges

name, g = benchmark_or_synthetic()
neg, info = sample_negative_edges(g, 0, return_info=True)
print(name, "negatives:", neg.m, "self-loops repaired:", info["self_loops_repaired"])
idx = interval_index(g.t, 20)
print("edges in late interval:", int(np.sum(idx == 19)))

# %%
reports = run_link_prediction_settings(g, TdlgConfig(), SplitSpec(trials=3))
for rep in reports.values():
    print(rep.to_table(), end="\n\n")
