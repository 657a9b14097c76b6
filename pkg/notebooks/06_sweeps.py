"""
Sensitivity to the time scale and to normalization
==================================================
"""

# %%
from _data import benchmark_or_synthetic

from tdlg.pipelines import SplitSpec, sweep_normalization, sweep_sigma

name, g = benchmark_or_synthetic()
split = SplitSpec(trials=3)

sweep = sweep_sigma(g, [1e-3, 1e-2, 1e-1, 1.0, 10.0], "classify", split=split)
for row in sweep["grid"]:
    print(f"sigma ratio {row['sigma_ratio']:>6g}: AUC {100 * row['mean_auc']:.2f} "
          f"({row['proportion_of_best']:.3f} of best)")

# %%
for scheme, rep in sweep_normalization(g, split=split).items():
    print(f"{scheme:>8}: AUC {100 * rep.mean_auc:.2f}")
