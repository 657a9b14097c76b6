"""Shared helper: a benchmark graph when available, else a labeled TSBM."""

import os
from pathlib import Path

import numpy as np

from tdlg import bundled_manifest, load_dataset
from tdlg.tsbm import TsbmParams, generate_tsbm


def benchmark_or_synthetic(name="bitcoinalpha"):
    data_dir = os.environ.get("TDLG_DATA_DIR", Path(__file__).resolve().parents[1] / "data")
    entries = bundled_manifest(data_dir)
    if Path(entries[name]["path"]).exists():
        return name, load_dataset(name, entries)
    # stand-in: label says whether an edge stays inside a community
    g, tags = generate_tsbm(TsbmParams(n=400, delta=20, alpha1=0.8, alpha2=0.3, seed=7))
    return "synthetic TSBM", g.with_labels(np.isin(tags, [0, 1, 3, 4]).astype(np.int8))
