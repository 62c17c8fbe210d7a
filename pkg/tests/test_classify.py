"""Tests for the linear classifiers and their training objectives."""

import json

import numpy as np
import pytest

from condiag import (
    LinearModel,
    TrainConfig,
    ValidationError,
    decision_scores,
    hyperparam_grid,
    model_from_json,
    model_to_json,
    predict_proba,
    roc_auc,
    train_logreg,
    train_sgd_elasticnet,
)
from condiag.classify import elasticnet_objective, logistic_gradient, logistic_loss


def two_blobs(rng, n=40, d=4, sep=2.0):
    """Overlapping Gaussian blobs; labels half and half."""
    X = rng.normal(size=(n, d))
    y = np.zeros(n, dtype=int)
    y[n // 2 :] = 1
    X[y == 1, 0] += sep
    return X, y


class TestLogisticObjective:
    def test_gradient_matches_finite_differences(self, rng):
        # Central-difference oracle over many random draws.
        h = 1e-6
        for _ in range(100):
            n, d = int(rng.integers(3, 12)), int(rng.integers(1, 6))
            X = rng.normal(size=(n, d))
            y = rng.integers(0, 2, size=n).astype(float)
            w = rng.normal(size=d)
            b = float(rng.normal())
            lam = float(rng.uniform(0, 0.5))
            gw, gb = logistic_gradient(w, b, X, y, lam)
            for j in range(d):
                e = np.zeros(d)
                e[j] = h
                num = (logistic_loss(w + e, b, X, y, lam) - logistic_loss(w - e, b, X, y, lam)) / (2 * h)
                assert abs(num - gw[j]) <= 1e-5 * max(1.0, abs(num))
            num_b = (logistic_loss(w, b + h, X, y, lam) - logistic_loss(w, b - h, X, y, lam)) / (2 * h)
            assert abs(num_b - gb) <= 1e-5 * max(1.0, abs(num_b))


class TestTrainLogreg:
    def test_zero_iteration_model_predicts_half(self):
        model = LinearModel(kind="logreg", weights=np.zeros(3), intercept=0.0, lam=0.0, l1_ratio=0.0, seed=0)
        X = np.random.default_rng(0).normal(size=(10, 3))
        np.testing.assert_array_equal(predict_proba(model, X), np.full(10, 0.5))

    def test_separable_1d_data(self):
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.array([0, 0, 1, 1])
        model = train_logreg(X, y, 1e-6)
        scores = decision_scores(model, X)
        assert roc_auc(scores, y) == 1.0
        preds = (predict_proba(model, X) >= 0.5).astype(int)
        np.testing.assert_array_equal(preds, y)

    def test_reaches_stationary_point(self, rng):
        X, y = two_blobs(rng)
        lam = 0.1
        model = train_logreg(X, y, lam, TrainConfig(tol=1e-14))
        gw, gb = logistic_gradient(model.weights, model.intercept, X, y, lam)
        assert np.max(np.abs(gw)) < 1e-6 and abs(gb) < 1e-6

    def test_regularization_monotonicity(self, rng):
        X, y = two_blobs(rng)
        norms = [
            np.linalg.norm(train_logreg(X, y, lam, TrainConfig(tol=1e-13)).weights)
            for lam in (1e-3, 1e-2, 1e-1, 1.0, 10.0)
        ]
        for a, b in zip(norms, norms[1:]):
            assert b <= a + 1e-6

    def test_label_flip_antisymmetry(self, rng):
        X, y = two_blobs(rng)
        m1 = train_logreg(X, y, 0.01, TrainConfig(tol=1e-13))
        m2 = train_logreg(X, 1 - y, 0.01, TrainConfig(tol=1e-13))
        a1 = roc_auc(decision_scores(m1, X), y)
        a2 = roc_auc(decision_scores(m2, X), y)
        assert a1 + a2 == pytest.approx(1.0, abs=1e-9)

    def test_feature_scaling_covariance_unregularized(self, rng):
        X, y = two_blobs(rng, sep=1.0)
        c = 3.5
        X_scaled = X.copy()
        X_scaled[:, 0] *= c
        cfg = TrainConfig(tol=1e-15, max_iterations=50000)
        m = train_logreg(X, y, 0.0, cfg)
        m_scaled = train_logreg(X_scaled, y, 0.0, cfg)
        rescaled = m_scaled.weights.copy()
        rescaled[0] *= c
        np.testing.assert_allclose(rescaled, m.weights, atol=1e-6)
        np.testing.assert_allclose(
            decision_scores(m_scaled, X_scaled), decision_scores(m, X), atol=1e-6
        )

    def test_single_class_rejected(self, rng):
        X = rng.normal(size=(6, 2))
        with pytest.raises(ValidationError):
            train_logreg(X, np.zeros(6, dtype=int), 0.1)

    def test_deterministic(self, rng):
        X, y = two_blobs(rng)
        m1 = train_logreg(X, y, 0.01)
        m2 = train_logreg(X, y, 0.01)
        np.testing.assert_array_equal(m1.weights, m2.weights)
        assert m1.intercept == m2.intercept


class TestTrainSGD:
    def test_l1_zero_approaches_full_batch_loss(self, rng):
        X, y = two_blobs(rng, n=40, d=5, sep=1.5)
        lam = 0.1
        ref = train_logreg(X, y, lam, TrainConfig(tol=1e-14))
        ref_loss = logistic_loss(ref.weights, ref.intercept, X, y, lam)
        sgd_cfg = TrainConfig(max_iterations=3000, initial_step=0.5, step_decay=0.02, tol=0.0, seed=7)
        model = train_sgd_elasticnet(X, y, lam, 0.0, sgd_cfg)
        loss = logistic_loss(model.weights, model.intercept, X, y, lam)
        assert loss - ref_loss <= 1e-3

    def test_heavy_l1_zeroes_all_weights(self, rng):
        X, y = two_blobs(rng)
        model = train_sgd_elasticnet(X, y, 1e3, 1.0)
        np.testing.assert_array_equal(model.weights, np.zeros(X.shape[1]))
        probas = predict_proba(model, X)
        assert np.all(probas == probas[0])

    def test_same_seed_bit_identical(self, rng):
        X, y = two_blobs(rng)
        cfg = TrainConfig(max_iterations=20, initial_step=0.05, step_decay=1e-3, tol=0.0, seed=11)
        m1 = train_sgd_elasticnet(X, y, 0.1, 0.5, cfg)
        m2 = train_sgd_elasticnet(X, y, 0.1, 0.5, cfg)
        np.testing.assert_array_equal(m1.weights, m2.weights)
        assert m1.intercept == m2.intercept
        assert model_to_json(m1) == model_to_json(m2)

    def test_different_seed_differs(self, rng):
        X, y = two_blobs(rng)
        cfg1 = TrainConfig(max_iterations=5, initial_step=0.05, tol=0.0, seed=1)
        cfg2 = TrainConfig(max_iterations=5, initial_step=0.05, tol=0.0, seed=2)
        m1 = train_sgd_elasticnet(X, y, 0.1, 0.5, cfg1)
        m2 = train_sgd_elasticnet(X, y, 0.1, 0.5, cfg2)
        assert not np.array_equal(m1.weights, m2.weights)

    def test_l1_ratio_validated(self, rng):
        X, y = two_blobs(rng)
        with pytest.raises(ValidationError):
            train_sgd_elasticnet(X, y, 0.1, 1.5)

    def test_objective_includes_both_penalties(self, rng):
        w = np.array([1.0, -2.0])
        b = 0.5
        X = rng.normal(size=(6, 2))
        y = np.array([0, 1, 0, 1, 0, 1], dtype=float)
        lam, r = 0.4, 0.25
        expected = (
            logistic_loss(w, b, X, y, 0.0)
            + lam * r * 3.0
            + lam * (1 - r) / 2.0 * 5.0
        )
        assert elasticnet_objective(w, b, X, y, lam, r) == pytest.approx(expected, rel=1e-12)


class TestScoring:
    def test_score_and_proba_definition(self):
        model = LinearModel(kind="logreg", weights=np.array([1.0, 0.0]), intercept=0.0, lam=0.0, l1_ratio=0.0, seed=0)
        scores = decision_scores(model, np.array([[3.0, 7.0]]))
        assert scores[0] == 3.0
        assert predict_proba(model, np.array([[3.0, 7.0]]))[0] == pytest.approx(
            1.0 / (1.0 + np.exp(-3.0)), rel=1e-15
        )

    def test_intercept_shift_keeps_auc(self, rng):
        X, y = two_blobs(rng)
        m = train_logreg(X, y, 0.01)
        shifted = LinearModel(
            kind="logreg", weights=m.weights, intercept=m.intercept + 4.2,
            lam=m.lam, l1_ratio=m.l1_ratio, seed=m.seed,
        )
        s1 = decision_scores(m, X)
        s2 = decision_scores(shifted, X)
        np.testing.assert_allclose(s2 - s1, 4.2, atol=1e-12)
        assert roc_auc(s1, y) == roc_auc(s2, y)

    def test_monotone_proba(self, rng):
        model = LinearModel(kind="logreg", weights=np.array([2.0]), intercept=-1.0, lam=0.0, l1_ratio=0.0, seed=0)
        X = np.linspace(-3, 3, 20).reshape(-1, 1)
        probas = predict_proba(model, X)
        assert np.all(np.diff(probas) > 0)

    def test_dimension_mismatch(self, rng):
        model = LinearModel(kind="logreg", weights=np.zeros(3), intercept=0.0, lam=0.0, l1_ratio=0.0, seed=0)
        with pytest.raises(ValidationError):
            decision_scores(model, rng.normal(size=(4, 2)))


class TestHyperparamGrid:
    def test_sizes(self):
        assert len(hyperparam_grid("logreg")) == 5
        assert len(hyperparam_grid("sgd")) == 25

    def test_identical_across_calls(self):
        assert hyperparam_grid("logreg") == hyperparam_grid("logreg")
        assert hyperparam_grid("sgd") == hyperparam_grid("sgd")

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            hyperparam_grid("svm")


class TestSerialization:
    def test_schema_and_roundtrip(self):
        m = LinearModel(kind="sgd", weights=np.array([0.5, -1.5]), intercept=0.25, lam=0.1, l1_ratio=0.85, seed=42)
        text = model_to_json(m)
        obj = json.loads(text)
        assert set(obj) == {"kind", "weights", "intercept", "hyperparams", "seed"}
        back = model_from_json(text)
        np.testing.assert_array_equal(back.weights, m.weights)
        assert back.intercept == m.intercept
        assert back.kind == m.kind and back.seed == m.seed
        assert back.lam == m.lam and back.l1_ratio == m.l1_ratio
