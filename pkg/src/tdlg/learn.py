"""Weighted L2 logistic regression (truncated Newton) and rank-based AUC."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import expit
from scipy.stats import rankdata

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class LogRegConfig:
    l2: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-6
    class_weight: str = "balanced"
    max_cg_iter: int = 250


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    config: LogRegConfig = field(default_factory=LogRegConfig)
    n_iter: int = 0
    converged: bool = False
    status: str = ""
    loss_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "config": asdict(self.config),
            "n_iter": self.n_iter,
            "converged": self.converged,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogRegModel":
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format_version')!r}")
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d["bias"]),
                   LogRegConfig(**d["config"]), d["n_iter"], d["converged"], d["status"])


def save_model(model: LogRegModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh)


def load_model(path) -> LogRegModel:
    with open(path, encoding="utf-8") as fh:
        return LogRegModel.from_dict(json.load(fh))


def class_weights(y, scheme: str = "balanced") -> dict:
    """Per-class loss weights; balanced gives N / (2 * N_c)."""
    y = np.asarray(y)
    if scheme == "uniform":
        return {0: 1.0, 1: 1.0}
    if scheme != "balanced":
        raise ValueError(f"unknown class weighting {scheme!r}")
    n = y.size
    counts = np.bincount(y.astype(np.int64), minlength=2)
    return {c: n / (2.0 * counts[c]) if counts[c] else 0.0 for c in (0, 1)}


def _as_features(X):
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    return np.asarray(X, dtype=np.float64)


def logistic_loss(params, X, y, sample_weight, l2):
    """Weighted loss and gradient at ``params = [weights..., bias]``.

    loss = sum_i w_i * log(1 + exp(-s_i * z_i)) + l2/2 * ||weights||^2 with
    s_i = 2 y_i - 1 and z = X @ weights + bias. The bias is not penalized.
    """
    beta, b = params[:-1], params[-1]
    z = X @ beta + b
    s = 2.0 * y - 1.0
    loss = float(sample_weight @ np.logaddexp(0.0, -s * z)) + 0.5 * l2 * float(beta @ beta)
    r = sample_weight * (expit(z) - y)
    grad = np.empty_like(params)
    grad[:-1] = X.T @ r + l2 * beta
    grad[-1] = r.sum()
    return loss, grad


def _hess_vec(X, curv, l2, v):
    beta, b = v[:-1], v[-1]
    q = curv * (X @ beta + b)
    out = np.empty_like(v)
    out[:-1] = X.T @ q + l2 * beta
    out[-1] = q.sum()
    return out


def _cg(hv, g, tol, max_iter):
    """Approximately solve H p = -g by conjugate gradients."""
    p = np.zeros_like(g)
    r = -g.copy()
    d = r.copy()
    rr = float(r @ r)
    for _ in range(max_iter):
        if np.sqrt(rr) <= tol:
            break
        Hd = hv(d)
        dHd = float(d @ Hd)
        if dHd <= 0:
            break
        alpha = rr / dHd
        p += alpha * d
        r -= alpha * Hd
        rr_new = float(r @ r)
        d = r + (rr_new / rr) * d
        rr = rr_new
    if not p.any():
        p = -g
    return p


def train_logreg(X, y, config: Optional[LogRegConfig] = None, **overrides) -> LogRegModel:
    """Fit a binary logistic regression by line-searched truncated Newton.

    Full-batch and deterministic for a given row order. Stops when the
    gradient infinity-norm drops to ``config.tol`` or after
    ``config.max_iter`` Newton steps; the model records which.
    """
    config = config or LogRegConfig()
    if overrides:
        config = LogRegConfig(**{**asdict(config), **overrides})
    X = _as_features(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} feature rows but {y.size} labels")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0/1")
    if y.min() == y.max():
        raise TrainingError("training data contains a single class")
    vals = X.data if sp.issparse(X) else X
    if not np.all(np.isfinite(vals)):
        raise ValueError("features must be finite")
    cw = class_weights(y, config.class_weight)
    sw = np.where(y == 1, cw[1], cw[0])

    params = np.zeros(X.shape[1] + 1)
    loss, grad = logistic_loss(params, X, y, sw, config.l2)
    history = [loss]
    gnorm0 = max(np.linalg.norm(grad), 1e-300)
    status = "max_iter"
    it = 0
    for it in range(1, config.max_iter + 1):
        if np.abs(grad).max() <= config.tol:
            it -= 1
            status = "converged"
            break
        prob = expit(X @ params[:-1] + params[-1])
        curv = sw * prob * (1.0 - prob)
        gn = np.linalg.norm(grad)
        eta = min(0.5, np.sqrt(gn / gnorm0))
        step = _cg(lambda v: _hess_vec(X, curv, config.l2, v), grad, eta * gn, config.max_cg_iter)
        slope = float(grad @ step)
        if slope >= 0:
            step, slope = -grad, -float(grad @ grad)
        t = 1.0
        accepted = False
        for _ in range(60):
            cand = params + t * step
            new_loss, new_grad = logistic_loss(cand, X, y, sw, config.l2)
            if not np.isfinite(new_loss):
                raise TrainingError(f"non-finite loss at iteration {it}")
            if new_loss <= loss + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # Armijo can fail from rounding alone this close to the optimum
            if new_loss <= loss and np.abs(new_grad).max() < np.abs(grad).max():
                accepted = True
            else:
                status = "line_search_stalled"
                it -= 1
                break
        params, loss, grad = cand, new_loss, new_grad
        history.append(loss)
    else:
        if np.abs(grad).max() <= config.tol:
            status = "converged"
    if status != "converged":
        logger.info("logistic regression stopped (%s) after %d iterations, |grad|_inf=%.3e",
                    status, it, np.abs(grad).max())
    return LogRegModel(params[:-1].copy(), float(params[-1]), config, it,
                       status == "converged", status, history)


def decision_function(model: LogRegModel, X) -> np.ndarray:
    X = _as_features(X)
    if X.ndim != 2 or X.shape[1] != model.weights.size:
        raise ValueError(f"expected {model.weights.size} feature columns, got {X.shape[-1]}")
    return np.asarray(X @ model.weights).ravel() + model.bias


def predict_scores(model: LogRegModel, X) -> np.ndarray:
    """Predicted probability of class 1 for each row."""
    return expit(decision_function(model, X))


def auc(scores, labels) -> float:
    """Area under the ROC curve by the midrank (Mann-Whitney) statistic.

    Ties between a positive and a negative count one half.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.size != labels.size:
        raise ValueError("scores and labels differ in length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(scores, method="average")
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
