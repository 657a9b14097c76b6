"""Edge classification and temporal link prediction experiments."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional, Sequence

import numpy as np

from .graph import TemporalGraph, build_incidence, concat
from .linegraph import TdlgConfig, build_cross_tdlg, build_tdlg
from .eigen import dense_embed
from .learn import LogRegConfig, auc, predict_scores, train_logreg

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20210101
SETTINGS = ("interpolative", "extrapolative")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    trials: int = 10
    seed: int = DEFAULT_SEED
    intervals: int = 20

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.intervals < 2:
            raise ValueError("intervals must be >= 2")


@dataclass
class ExperimentReport:
    task: str
    aucs: list
    seconds: list
    config: dict
    notes: list = field(default_factory=list)

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.aucs))

    @property
    def ci95(self) -> Optional[float]:
        """Half-width 1.96 * sample std / sqrt(trials); None for one trial."""
        if len(self.aucs) < 2:
            return None
        return float(1.96 * np.std(self.aucs, ddof=1) / np.sqrt(len(self.aucs)))

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "mean_auc": self.mean_auc,
            "ci95": self.ci95,
            "aucs": list(self.aucs),
            "seconds": list(self.seconds),
            "config": self.config,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        lines = [f"task: {self.task}", f"{'trial':>5}  {'AUC':>9}  {'seconds':>9}"]
        for k, (a, s) in enumerate(zip(self.aucs, self.seconds)):
            lines.append(f"{k:>5}  {100 * a:>9.2f}  {s:>9.3f}")
        ci = self.ci95
        ci_txt = f" +/- {100 * ci:.2f}" if ci is not None else ""
        lines.append(f" mean  {100 * self.mean_auc:>9.2f}{ci_txt}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["task", "trial", "auc", "seconds"])
        for k, (a, s) in enumerate(zip(self.aucs, self.seconds)):
            w.writerow([self.task, k, repr(float(a)), repr(float(s))])
        return buf.getvalue()


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("TDLG_THREADS", "1")))
    except ValueError:
        return 1


def _run_trials(fn: Callable[[int], tuple], trials: int):
    workers = min(_workers(), trials)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, range(trials)))
    return [fn(k) for k in range(trials)]


def _split(rng, size, fraction):
    perm = rng.permutation(size)
    cut = int(round(fraction * size))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def run_edge_classification(g: TemporalGraph, cfg: Optional[TdlgConfig] = None,
                            split: Optional[SplitSpec] = None, dense_k: Optional[int] = None,
                            logreg: Optional[LogRegConfig] = None) -> ExperimentReport:
    """Per trial: TDLG on all edges, random label split, balanced logistic
    regression on training rows, AUC on test rows.

    ``dense_k`` switches from sparse TDLG rows to a k-dim eigen-embedding.
    A training split that holds one class is redrawn with the next sub-seed.
    """
    cfg = cfg or TdlgConfig()
    split = split or SplitSpec()
    logreg = logreg or LogRegConfig(class_weight="balanced")
    if g.labels is None:
        raise ValueError("edge classification needs labels on every edge")
    y = g.labels.astype(np.float64)
    if y.min() == y.max():
        raise ValueError("all edge labels are identical")
    notes = []

    def trial(k):
        for attempt in range(100):
            rng = np.random.default_rng([split.seed + k, attempt])
            train, test = _split(rng, g.m, split.train_fraction)
            if np.ptp(y[train]) > 0 and np.ptp(y[test]) > 0:
                break
            notes.append(f"trial {k}: single-class split, redrawn (attempt {attempt})")
        else:
            raise RuntimeError("could not draw a split with both classes")
        start = time.perf_counter()
        A = build_tdlg(g, build_incidence(g), cfg)
        X = dense_embed(A, dense_k, seed=split.seed + k) if dense_k else A
        model = train_logreg(X[train], y[train], logreg)
        score = auc(predict_scores(model, X[test]), y[test])
        elapsed = time.perf_counter() - start
        logger.info("edge classification trial %d: AUC %.4f (%.2fs)", k, score, elapsed)
        return score, elapsed

    results = _run_trials(trial, split.trials)
    config = {"tdlg": cfg.to_dict(), "split": asdict(split), "dense_k": dense_k,
              "logreg": asdict(logreg)}
    return ExperimentReport("edge_classification", [r[0] for r in results],
                            [r[1] for r in results], config, notes)


def _repair_self_loops(u, v, rng, max_rounds=1000):
    """Swap v-entries of self-loop rows with random rows until none remain."""
    repaired = 0
    for _ in range(max_rounds):
        bad = np.flatnonzero(u == v)
        if bad.size == 0:
            return repaired
        partners = rng.integers(0, u.size, bad.size)
        for i, j in zip(bad, partners):
            if u[i] != v[i]:
                continue
            if u[i] != v[j] and u[j] != v[i]:
                v[i], v[j] = v[j], v[i]
                repaired += 1
    if np.any(u == v):
        raise RuntimeError("could not remove self-loops from shuffled edges")
    return repaired


def sample_negative_edges(g: TemporalGraph, seed, return_info: bool = False):
    """Fake edges from independent permutations of the u, v and t columns.

    Each column's multiset is preserved. Self-loops created by the shuffle are
    removed by swapping v-entries with other rows. Negatives that coincide
    with real edges are kept.
    """
    if g.m < 1:
        raise ValueError("need at least one edge")
    rng = np.random.default_rng(seed)
    u = g.u[rng.permutation(g.m)]
    v = g.v[rng.permutation(g.m)].copy()
    t = g.t[rng.permutation(g.m)]
    repaired = _repair_self_loops(u, v, rng) if g.m > 1 else 0
    neg = TemporalGraph(g.n, u, v, t, np.zeros(g.m, dtype=np.int8), g.node_ids)
    if not return_info:
        return neg
    return neg, {"self_loops_repaired": repaired, "degenerate": g.m == 1}


def interval_index(t: np.ndarray, intervals: int = 20) -> np.ndarray:
    """0-based equal-width interval of each time; the last is right-closed."""
    t = np.asarray(t, dtype=np.float64)
    lo, hi = float(t.min()), float(t.max())
    if not hi > lo:
        raise ValueError("time span must be positive")
    width = (hi - lo) / intervals
    idx = np.floor((t - lo) / width).astype(np.int64)
    return np.clip(idx, 0, intervals - 1)


def link_prediction_trial(g: TemporalGraph, cfg: TdlgConfig, split: SplitSpec, k: int,
                          settings: Sequence[str] = SETTINGS,
                          logreg: Optional[LogRegConfig] = None) -> dict:
    """One trial; returns ``{setting: (auc, seconds)}`` plus bookkeeping."""
    logreg = logreg or LogRegConfig(class_weight="uniform")
    if cfg.normalization != "none":
        raise ValueError("link prediction uses unnormalized TDLG features")
    rng = np.random.default_rng(split.seed + k)
    neg, info = sample_negative_edges(g, rng.integers(2**63), return_info=True)
    pos = g.with_labels(np.ones(g.m, dtype=np.int8))
    allg = concat([pos, neg])
    y = allg.labels.astype(np.float64)
    idx = interval_index(allg.t, split.intervals)
    early = np.flatnonzero(idx < split.intervals - 1)
    late = np.flatnonzero(idx == split.intervals - 1)
    perm = rng.permutation(early.size)
    cut = int(round(split.train_fraction * early.size))
    train = np.sort(early[perm[:cut]])
    interp = np.sort(early[perm[cut:]])
    tests = {"interpolative": interp, "extrapolative": late}
    for s in settings:
        if tests[s].size == 0:
            raise ValueError(f"no test edges for the {s} setting")
        if np.ptp(y[tests[s]]) == 0:
            raise ValueError(f"{s} test edges hold a single class")

    start = time.perf_counter()
    gtrain = allg.subgraph(train)
    sigma = cfg.resolve_sigma(gtrain.t)
    inc = build_incidence(gtrain)
    A_rr = build_tdlg(gtrain, inc, cfg, sigma_t=sigma)
    model = train_logreg(A_rr, y[train], logreg)
    shared = time.perf_counter() - start
    out = {"sigma_t": sigma, "m_train": int(train.size), "negatives": info}
    for s in settings:
        t0 = time.perf_counter()
        gtest = allg.subgraph(tests[s])
        A_er = build_cross_tdlg(gtrain, gtest, cfg, sigma_t=sigma, train_inc=inc)
        if A_er.shape[1] != train.size:
            raise AssertionError("test features must index training edges")
        score = auc(predict_scores(model, A_er), y[tests[s]])
        out[s] = (score, shared + time.perf_counter() - t0)
        logger.info("link prediction trial %d (%s): AUC %.4f", k, s, score)
    return out


def run_link_prediction(g: TemporalGraph, cfg: Optional[TdlgConfig] = None,
                        split: Optional[SplitSpec] = None, setting: str = "interpolative",
                        logreg: Optional[LogRegConfig] = None) -> ExperimentReport:
    """Interpolative or extrapolative temporal link prediction.

    Per trial: shuffle-based negatives, 20 equal-width time intervals over
    all edges, 70% of early (intervals 1..19) edges for training, and either
    the remaining early edges or all late (interval 20) edges for testing.
    """
    reports = run_link_prediction_settings(g, cfg, split, (setting,), logreg)
    return reports[setting]


def run_link_prediction_settings(g: TemporalGraph, cfg: Optional[TdlgConfig] = None,
                                 split: Optional[SplitSpec] = None,
                                 settings: Sequence[str] = SETTINGS,
                                 logreg: Optional[LogRegConfig] = None) -> dict:
    """Both settings from shared trials (same negatives, splits and model)."""
    cfg = cfg or TdlgConfig()
    split = split or SplitSpec(trials=5)
    logreg = logreg or LogRegConfig(class_weight="uniform")
    for s in settings:
        if s not in SETTINGS:
            raise ValueError(f"unknown setting {s!r}")
    results = _run_trials(lambda k: link_prediction_trial(g, cfg, split, k, settings, logreg),
                          split.trials)
    out = {}
    for s in settings:
        notes = [f"trial {k}: {r['negatives']['self_loops_repaired']} self-loops repaired"
                 for k, r in enumerate(results) if r["negatives"]["self_loops_repaired"]]
        notes += [f"trial {k}: degenerate single-edge negative set"
                  for k, r in enumerate(results) if r["negatives"]["degenerate"]]
        config = {"tdlg": cfg.to_dict(), "split": asdict(split), "setting": s,
                  "logreg": asdict(logreg),
                  "sigma_t_per_trial": [r["sigma_t"] for r in results]}
        out[s] = ExperimentReport(f"link_prediction_{s}", [r[s][0] for r in results],
                                  [r[s][1] for r in results], config, notes)
    return out


def sweep_sigma(g: TemporalGraph, ratios: Sequence[float], task: str = "classify",
                cfg: Optional[TdlgConfig] = None, split: Optional[SplitSpec] = None,
                **kwargs) -> dict:
    """Run ``task`` per sigma ratio; AUCs also reported relative to the best."""
    base = cfg or TdlgConfig()
    rows = []
    for r in ratios:
        c = TdlgConfig(**{**base.to_dict(), "sigma_t": None, "sigma_ratio": r})
        if task == "classify":
            rep = run_edge_classification(g, c, split, **kwargs)
        elif task in SETTINGS:
            rep = run_link_prediction(g, c, split, task, **kwargs)
        else:
            raise ValueError(f"unknown task {task!r}")
        rows.append({"sigma_ratio": r, "mean_auc": rep.mean_auc, "ci95": rep.ci95,
                     "aucs": rep.aucs})
    best = max(row["mean_auc"] for row in rows)
    for row in rows:
        row["proportion_of_best"] = row["mean_auc"] / best
    best_row = max(rows, key=lambda row: row["mean_auc"])
    return {"task": task, "best_sigma_ratio": best_row["sigma_ratio"], "best_mean_auc": best,
            "grid": rows, "config": {"tdlg": base.to_dict(),
                                     "split": asdict(split) if split else None}}


def sweep_normalization(g: TemporalGraph, schemes=("none", "spectral", "edge"),
                        cfg: Optional[TdlgConfig] = None, split: Optional[SplitSpec] = None) -> dict:
    """Edge classification per normalization scheme."""
    base = cfg or TdlgConfig()
    out = {}
    for s in schemes:
        c = TdlgConfig(**{**base.to_dict(), "normalization": s})
        out[s] = run_edge_classification(g, c, split)
    return out
