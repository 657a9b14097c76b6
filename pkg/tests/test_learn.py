import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from tdlg.learn import (LogRegConfig, LogRegModel, TrainingError, auc, class_weights, decision_function,
                        load_model, logistic_loss, predict_scores, save_model, train_logreg)

from oracles import central_difference, pairwise_auc, weighted_logistic_loss


def blobs(seed, n=200, d=5, shift=1.0):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.3).astype(float)
    X = rng.normal(size=(n, d)) + shift * y[:, None] * rng.normal(size=d)
    return X, y


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 30), st.integers(1, 6), st.floats(0.0, 5.0))
def test_gradient_matches_finite_differences(seed, n, d, l2):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, n).astype(float)
    w = rng.uniform(0.2, 3.0, n)
    params = rng.normal(size=d + 1)
    loss, grad = logistic_loss(params, X, y, w, l2)
    assert loss == pytest.approx(weighted_logistic_loss(params, X, y, w, l2), rel=1e-12)
    fd = central_difference(lambda p: weighted_logistic_loss(p, X, y, w, l2), params)
    assert rel_err(grad, fd) <= 1e-5


def test_sparse_and_dense_gradients_agree():
    X, y = blobs(1)
    Xs = sp.csr_matrix(np.where(np.abs(X) > 1, X, 0))
    p = np.random.default_rng(0).normal(size=X.shape[1] + 1)
    w = np.ones_like(y)
    a = logistic_loss(p, Xs, y, w, 1.0)
    b = logistic_loss(p, Xs.toarray(), y, w, 1.0)
    assert a[0] == pytest.approx(b[0], rel=1e-13) and np.allclose(a[1], b[1], rtol=1e-12)


def test_balanced_weights_90_10():
    y = np.array([0] * 90 + [1] * 10)
    w = class_weights(y, "balanced")
    assert w[0] == pytest.approx(100 / 180) and round(w[0], 4) == 0.5556
    assert w[1] == 5.0
    assert class_weights(y, "uniform") == {0: 1.0, 1: 1.0}


def test_two_point_separable():
    m = train_logreg(np.array([[1.0], [-1.0]]), np.array([1, 0]))
    p = predict_scores(m, np.array([[1.0], [-1.0]]))
    assert p[0] > 0.5 > p[1]


def test_symmetry_flip():
    X, y = blobs(2)
    a = train_logreg(X, y)
    # flipped labels: the whole linear score negates
    b = train_logreg(X, 1 - y)
    assert np.allclose(a.weights, -b.weights, atol=1e-6)
    assert a.bias == pytest.approx(-b.bias, abs=1e-6)
    # flipped labels on negated features: only the bias negates
    c = train_logreg(-X, 1 - y)
    assert np.allclose(a.weights, c.weights, atol=1e-6)
    assert a.bias == pytest.approx(-c.bias, abs=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_converges_with_monotone_loss(seed):
    X, y = blobs(seed, shift=3.0)
    m = train_logreg(sp.csr_matrix(X), y)
    assert m.converged and m.status == "converged"
    assert np.all(np.diff(m.loss_history) <= 0)
    w = np.where(y == 1, *[class_weights(y)[c] for c in (1, 0)])
    _, g = logistic_loss(np.append(m.weights, m.bias), X, y, w, 1.0)
    assert np.abs(g).max() <= 1e-6


def test_iteration_cap_reported():
    X, y = blobs(0, shift=3.0)
    m = train_logreg(X, y, max_iter=1)
    assert not m.converged and m.status == "max_iter" and m.n_iter == 1


def test_training_errors():
    with pytest.raises(TrainingError, match="single class"):
        train_logreg(np.ones((3, 2)), np.zeros(3))
    with pytest.raises(ValueError, match="finite"):
        train_logreg(np.array([[np.nan], [1.0]]), np.array([0, 1]))
    with pytest.raises(ValueError):
        train_logreg(np.ones((3, 2)), np.array([0, 1]))


def test_predict_scores_examples():
    model = LogRegModel(np.zeros(3), 0.0)
    assert np.all(predict_scores(model, np.random.default_rng(0).normal(size=(4, 3))) == 0.5)
    model = LogRegModel(np.array([1.0, -2.0, 0.5]), 0.7)
    assert predict_scores(model, np.zeros((1, 3)))[0] == pytest.approx(1 / (1 + np.exp(-0.7)))
    with pytest.raises(ValueError):
        decision_function(model, np.zeros((2, 4)))
    X, y = blobs(5)
    a = train_logreg(X, y)
    b = train_logreg(np.hstack([X, np.zeros((X.shape[0], 2))]), y)
    Xt = blobs(6)[0]
    assert np.allclose(predict_scores(a, Xt), predict_scores(b, np.hstack([Xt, np.zeros((Xt.shape[0], 2))])),
                       atol=1e-9)


def test_model_dump_load(tmp_path):
    X, y = blobs(3)
    m = train_logreg(X, y, l2=0.5)
    save_model(m, tmp_path / "m.json")
    r = load_model(tmp_path / "m.json")
    assert np.array_equal(r.weights, m.weights) and r.bias == m.bias
    assert r.config == m.config and r.config.l2 == 0.5
    with pytest.raises(ValueError):
        LogRegModel.from_dict({**m.to_dict(), "format_version": 99})


def test_deterministic():
    X, y = blobs(4)
    a, b = train_logreg(X, y), train_logreg(X, y)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_auc_examples():
    assert auc([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert auc([0.3, 0.3, 0.3, 0.3], [1, 0, 1, 0]) == 0.5
    with pytest.raises(ValueError):
        auc([0.1, 0.2], [1, 1])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 50), st.booleans())
def test_auc_matches_pairwise_oracle(seed, n, ties):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    scores = rng.integers(0, 4, n).astype(float) if ties else rng.normal(size=n)
    assert auc(scores, labels) == pairwise_auc(scores, labels)
    assert auc(np.exp(3 * scores) - 7, labels) == pytest.approx(auc(scores, labels), abs=1e-15)
    assert auc(scores, 1 - labels) == pytest.approx(1 - auc(scores, labels), abs=1e-12)
