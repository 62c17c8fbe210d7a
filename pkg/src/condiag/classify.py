"""Linear classifiers trained on feature vectors.

Two trainers, both minimizing the mean logistic loss over {0,1} labels:

* ``train_logreg`` — full-batch gradient descent with backtracking line
  search and an L2 penalty on the weights (intercept unpenalized).
* ``train_sgd_elasticnet`` — per-sample stochastic gradient steps with a
  proximal soft-threshold for the L1 part, so weights can hit exact zeros.

Both are deterministic given their config; problem sizes here (d of a few
hundred, n of a few hundred) need nothing fancier.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import TrainingError, ValidationError

__all__ = [
    "LinearModel",
    "TrainConfig",
    "train_logreg",
    "train_sgd_elasticnet",
    "decision_scores",
    "predict_proba",
    "hyperparam_grid",
    "logistic_loss",
    "logistic_gradient",
    "elasticnet_objective",
    "model_to_json",
    "model_from_json",
]

LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0)
L1_RATIO_GRID = (0.0, 0.15, 0.5, 0.85, 1.0)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer knobs shared by both trainers.

    For the full-batch trainer ``max_iterations`` counts gradient steps and
    ``initial_step`` seeds the backtracking line search; for the stochastic
    trainer it counts epochs and the step at global step t is
    initial_step / (1 + step_decay * t).  ``tol`` stops either trainer when
    the objective changes by less than that between iterations/epochs.
    """

    max_iterations: int = 10000
    initial_step: float = 1.0
    step_decay: float = 0.0
    tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not self.initial_step > 0:
            raise ValidationError("initial_step must be > 0")
        if self.step_decay < 0:
            raise ValidationError("step_decay must be >= 0")


SGD_DEFAULTS = TrainConfig(max_iterations=100, initial_step=0.05, step_decay=1e-3, tol=1e-8)


@dataclass(frozen=True)
class LinearModel:
    """Trained linear scorer: score(x) = weights . x + intercept."""

    kind: str  # "logreg" or "sgd"
    weights: np.ndarray
    intercept: float
    lam: float
    l1_ratio: float
    seed: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or not math.isfinite(self.intercept):
            raise ValidationError("model weights and intercept must be finite 1-D")
        object.__setattr__(self, "weights", w)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _sigmoid_scalar(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def _check_training_inputs(X, y, lam: float) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValidationError(f"bad training shapes X {X.shape}, y {y.shape}")
    if X.shape[0] < 2:
        raise ValidationError("need at least two training samples")
    if not np.all(np.isfinite(X)):
        raise ValidationError("training features must be finite")
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("labels must be 0 or 1")
    if len(np.unique(y)) < 2:
        raise ValidationError("training labels contain a single class")
    if lam < 0:
        raise ValidationError("regularization strength must be >= 0")
    return X, y.astype(np.float64)


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Mean logistic loss plus (lam/2)||w||^2; intercept unpenalized."""
    s = X @ w + b
    data = float(np.mean(np.logaddexp(0.0, s) - y * s))
    return data + 0.5 * lam * float(w @ w)


def logistic_gradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Analytic gradient of ``logistic_loss`` in (w, b)."""
    s = X @ w + b
    r = _sigmoid(s) - y
    n = X.shape[0]
    return X.T @ r / n + lam * w, float(np.mean(r))


def elasticnet_objective(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float, l1_ratio: float
) -> float:
    """Mean logistic loss + lam * (l1_ratio ||w||_1 + (1 - l1_ratio)/2 ||w||^2)."""
    s = X @ w + b
    data = float(np.mean(np.logaddexp(0.0, s) - y * s))
    pen = lam * (l1_ratio * float(np.sum(np.abs(w))) + 0.5 * (1.0 - l1_ratio) * float(w @ w))
    return data + pen


def train_logreg(X, y, lam: float, cfg: TrainConfig | None = None) -> LinearModel:
    """L2-regularized logistic regression by full-batch descent.

    Backtracking (Armijo) line search with step doubling between
    iterations; stops when the loss change drops below ``cfg.tol`` or the
    gradient vanishes.  Deterministic given cfg.
    """
    if cfg is None:
        cfg = TrainConfig()
    X, y = _check_training_inputs(X, y, lam)
    d = X.shape[1]
    w = np.zeros(d)
    b = 0.0
    loss = logistic_loss(w, b, X, y, lam)
    gw, gb = logistic_gradient(w, b, X, y, lam)
    step = cfg.initial_step
    for it in range(cfg.max_iterations):
        if not math.isfinite(loss):
            raise TrainingError(f"loss became non-finite at iteration {it}", iteration=it)
        gnorm2 = float(gw @ gw) + gb * gb
        if gnorm2 <= 1e-24:
            break
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new = logistic_loss(w_new, b_new, X, y, lam)
            if loss_new <= loss - 1e-4 * step * gnorm2 or step < 1e-18:
                break
            step *= 0.5
        delta = loss - loss_new
        w, b, loss = w_new, b_new, loss_new
        gw, gb = logistic_gradient(w, b, X, y, lam)
        if abs(delta) <= cfg.tol:
            break
    return LinearModel(
        kind="logreg", weights=w, intercept=b, lam=lam, l1_ratio=0.0, seed=cfg.seed
    )


def _soft_threshold(w: np.ndarray, thr: float) -> np.ndarray:
    return np.sign(w) * np.maximum(np.abs(w) - thr, 0.0)


def train_sgd_elasticnet(
    X, y, lam: float, l1_ratio: float, cfg: TrainConfig | None = None
) -> LinearModel:
    """Elastic-net linear model by proximal stochastic gradient descent.

    Each step takes the logistic + L2 gradient on one sample, then
    soft-thresholds the weights by step * lam * l1_ratio, so L1 shrinkage
    produces exact zeros.  Sample order is reshuffled every epoch from
    ``cfg.seed``; two runs with the same config are bit-identical.
    """
    if cfg is None:
        cfg = SGD_DEFAULTS
    if not 0.0 <= l1_ratio <= 1.0:
        raise ValidationError("l1_ratio must lie in [0, 1]")
    X, y = _check_training_inputs(X, y, lam)
    n, d = X.shape
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(d)
    b = 0.0
    l2 = lam * (1.0 - l1_ratio)
    prev_obj = elasticnet_objective(w, b, X, y, lam, l1_ratio)
    t = 0
    for epoch in range(cfg.max_iterations):
        for i in rng.permutation(n):
            eta = cfg.initial_step / (1.0 + cfg.step_decay * t)
            g = _sigmoid_scalar(float(X[i] @ w + b)) - y[i]
            w -= eta * (g * X[i] + l2 * w)
            b -= eta * g
            if l1_ratio > 0.0:
                w = _soft_threshold(w, eta * lam * l1_ratio)
            t += 1
        obj = elasticnet_objective(w, b, X, y, lam, l1_ratio)
        if not math.isfinite(obj):
            raise TrainingError(f"objective became non-finite at epoch {epoch}", iteration=epoch)
        if abs(prev_obj - obj) <= cfg.tol:
            break
        prev_obj = obj
    return LinearModel(
        kind="sgd", weights=w, intercept=b, lam=lam, l1_ratio=l1_ratio, seed=cfg.seed
    )


def decision_scores(model: LinearModel, X) -> np.ndarray:
    """Raw linear scores w . x + b."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[0]:
        raise ValidationError(
            f"feature width {X.shape[-1] if X.ndim else '?'} does not match model "
            f"dimension {model.weights.shape[0]}"
        )
    return X @ model.weights + model.intercept


def predict_proba(model: LinearModel, X) -> np.ndarray:
    """sigmoid(decision score); monotone in the score."""
    return _sigmoid(decision_scores(model, X))


def hyperparam_grid(model_kind: str) -> list[dict]:
    """Deterministic tuning grid for a model kind."""
    if model_kind == "logreg":
        return [{"lam": lam, "l1_ratio": 0.0} for lam in LAMBDA_GRID]
    if model_kind == "sgd":
        return [{"lam": lam, "l1_ratio": r} for lam, r in product(LAMBDA_GRID, L1_RATIO_GRID)]
    raise ValidationError(f"unknown model kind {model_kind!r}")


def model_to_json(model: LinearModel) -> str:
    """Stable JSON serialization for reproducibility audits."""
    return json.dumps(
        {
            "kind": model.kind,
            "weights": [float(v) for v in model.weights],
            "intercept": float(model.intercept),
            "hyperparams": {"lam": float(model.lam), "l1_ratio": float(model.l1_ratio)},
            "seed": int(model.seed),
        }
    )


def model_from_json(text: str) -> LinearModel:
    obj = json.loads(text)
    return LinearModel(
        kind=obj["kind"],
        weights=np.asarray(obj["weights"], dtype=np.float64),
        intercept=float(obj["intercept"]),
        lam=float(obj["hyperparams"]["lam"]),
        l1_ratio=float(obj["hyperparams"]["l1_ratio"]),
        seed=int(obj["seed"]),
    )
