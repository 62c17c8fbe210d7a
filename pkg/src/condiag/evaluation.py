"""Repeated stratified cross-validated evaluation with ROC AUC scoring.

The protocol: for each of ``repeats`` independent partitions, split samples
into ``folds`` test folds that never separate two samples of the same
subject, tune hyperparameters by inner cross-validation on each training
fold, refit, and score the held-out fold.  Per-repeat AUC is the mean over
folds; the report aggregates mean and std over repeats.

Everything is keyed on sample/subject identifiers, not on row order, so
permuting the input rows leaves a seeded report byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from io import StringIO

import numpy as np

from .classify import (
    TrainConfig,
    decision_scores,
    hyperparam_grid,
    model_to_json,
    train_logreg,
    train_sgd_elasticnet,
)
from .errors import ValidationError
from .features import apply_standardizer, eigen_features, fit_standardizer, joint_features, project_features
from .joint_diag import JointDiagConfig, run
from .matrix_core import SymmetricMatrixSet

__all__ = [
    "LabeledDataset",
    "CVConfig",
    "EvalReport",
    "roc_auc",
    "stratified_group_kfold",
    "run_cv",
]

FEATURE_METHODS = ("joint_diag", "eigen")
MODEL_KINDS = ("logreg", "sgd")

# Hyperparameters used when inner-CV tuning is disabled or impossible.
UNTUNED_SETTING = {
    "logreg": {"lam": 1e-2, "l1_ratio": 0.0},
    "sgd": {"lam": 1e-2, "l1_ratio": 0.15},
}


@dataclass(frozen=True)
class LabeledDataset:
    """A symmetric matrix set with labels and subject/sample identifiers.

    ``subject_ids`` group scans of one individual (grouped CV never splits
    them across folds); ``sample_ids`` are unique per row and key the
    order-independent evaluation.
    """

    matrices: SymmetricMatrixSet
    labels: np.ndarray
    subject_ids: tuple
    sample_ids: tuple

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        n = self.matrices.count
        if labels.shape != (n,):
            raise ValidationError(f"expected {n} labels, got shape {labels.shape}")
        if np.any(labels < 0):
            raise ValidationError("labels must be nonnegative integers")
        subj = tuple(str(s) for s in self.subject_ids)
        sids = tuple(str(s) for s in self.sample_ids)
        if len(subj) != n or len(sids) != n:
            raise ValidationError("subject/sample id counts must match the matrix count")
        if len(set(sids)) != n:
            raise ValidationError("sample ids must be unique")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "subject_ids", subj)
        object.__setattr__(self, "sample_ids", sids)

    @property
    def count(self) -> int:
        return self.matrices.count

    @property
    def dim(self) -> int:
        return self.matrices.dim


@dataclass(frozen=True)
class CVConfig:
    """Evaluation protocol knobs.

    folds x repeats defaults (10 x 100) match the reporting convention the
    rest of the pipeline is built around; ``grouped`` keeps all scans of a
    subject in one fold; ``transductive`` extracts joint features once from
    the full dataset instead of refitting the basis per training fold
    (classifier and standardizer stay train-fold-only either way);
    ``tune`` switches inner-CV hyperparameter search on or off.
    """

    folds: int = 10
    repeats: int = 100
    grouped: bool = True
    transductive: bool = False
    seed: int = 0
    tune: bool = True

    def __post_init__(self):
        if self.folds < 2:
            raise ValidationError("folds must be >= 2")
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")


@dataclass(frozen=True)
class EvalReport:
    """Aggregated evaluation outcome: mean +/- std of per-repeat AUC."""

    task: str
    feature_method: str
    model_kind: str
    folds: int
    repeats: int
    grouped: bool
    transductive: bool
    seed: int
    per_repeat_auc: tuple
    mean_auc: float
    std_auc: float
    warnings: tuple = ()
    fold_models: tuple = ()  # (repeat, fold, model json) triples when collected

    def __post_init__(self):
        aucs = tuple(float(a) for a in self.per_repeat_auc)
        if not aucs:
            raise ValidationError("report needs at least one valid repeat")
        if any(not 0.0 <= a <= 1.0 for a in aucs):
            raise ValidationError("per-repeat AUCs must lie in [0, 1]")
        object.__setattr__(self, "per_repeat_auc", aucs)
        object.__setattr__(self, "warnings", tuple(self.warnings))
        object.__setattr__(self, "fold_models", tuple(self.fold_models))

    def to_json(self) -> str:
        return json.dumps(
            {
                "task": self.task,
                "feature_method": self.feature_method,
                "model": self.model_kind,
                "folds": self.folds,
                "repeats": self.repeats,
                "grouped": self.grouped,
                "transductive": self.transductive,
                "seed": self.seed,
                "mean_auc": self.mean_auc,
                "std_auc": self.std_auc,
                "per_repeat": list(self.per_repeat_auc),
                "warnings": list(self.warnings),
            },
            indent=2,
        )

    CSV_HEADER = "task,feature_method,model,folds,repeats,grouped,transductive,seed,mean_auc,std_auc"

    def to_csv(self) -> str:
        buf = StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER.split(","))
        writer.writerow(
            [
                self.task,
                self.feature_method,
                self.model_kind,
                self.folds,
                self.repeats,
                self.grouped,
                self.transductive,
                self.seed,
                repr(self.mean_auc),
                repr(self.std_auc),
            ]
        )
        return buf.getvalue()


def roc_auc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative.

    Ties count one half.  Computed from average ranks (Mann-Whitney), which
    agrees exactly with the O(m^2) pairwise count.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise ValidationError(f"bad shapes scores {scores.shape}, labels {labels.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores must be finite")
    pos = labels == 1
    neg = labels == 0
    if not (np.all(pos | neg) and pos.any() and neg.any()):
        raise ValidationError("labels must contain both classes (0 and 1)")
    m = scores.shape[0]
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(m, dtype=np.float64)
    i = 0
    while i < m:
        j = i
        while j + 1 < m and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # 1-based average rank
        i = j + 1
    n_pos = int(pos.sum())
    n_neg = m - n_pos
    u = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def stratified_group_kfold(labels, groups, k: int, seed: int) -> list[np.ndarray]:
    """Split sample indices into k test folds that never divide a group.

    Groups are dealt to folds round-robin within label strata (a group's
    stratum is its majority label), so fold group-counts differ by at most
    one and class proportions stay approximately balanced.  The assignment
    depends only on the group identifier values, the labels, and the seed,
    never on row order.
    """
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    if labels.shape != groups.shape or labels.ndim != 1:
        raise ValidationError(f"bad shapes labels {labels.shape}, groups {groups.shape}")
    unique_groups, inverse = np.unique(groups, return_inverse=True)
    n_groups = unique_groups.shape[0]
    if not 2 <= k <= n_groups:
        raise ValidationError(f"k={k} must lie in [2, number of groups={n_groups}]")
    label_values, label_idx = np.unique(labels, return_inverse=True)
    counts = np.zeros((n_groups, label_values.shape[0]), dtype=np.int64)
    np.add.at(counts, (inverse, label_idx), 1)
    majority = np.argmax(counts, axis=1)  # ties resolve to the smaller label value

    rng = np.random.default_rng(seed)
    fold_of_group = np.empty(n_groups, dtype=np.int64)
    counter = int(rng.integers(k))
    for stratum in range(label_values.shape[0]):
        members = np.flatnonzero(majority == stratum)
        members = rng.permutation(members)
        for g in members:
            fold_of_group[g] = counter % k
            counter += 1
    sample_folds = fold_of_group[inverse]
    return [np.flatnonzero(sample_folds == f) for f in range(k)]


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _fit_model(model_kind, X, y, setting, seed, train_cfg):
    cfg = replace(train_cfg, seed=seed)
    if model_kind == "logreg":
        return train_logreg(X, y, setting["lam"], cfg)
    return train_sgd_elasticnet(X, y, setting["lam"], setting["l1_ratio"], cfg)


def _default_train_cfg(model_kind: str) -> TrainConfig:
    if model_kind == "logreg":
        return TrainConfig(max_iterations=600, tol=1e-9)
    return TrainConfig(max_iterations=40, initial_step=0.05, step_decay=1e-3, tol=1e-8)


def _tune_setting(
    X, y, groups, model_kind, cfg: CVConfig, train_cfg, repeat, fold, warn
) -> dict:
    """Pick the grid setting with the best inner-CV AUC on the training fold."""
    if not cfg.tune:
        return UNTUNED_SETTING[model_kind]
    n_groups = len(np.unique(groups))
    inner_k = min(3, n_groups)
    if inner_k < 2:
        warn(f"repeat={repeat} fold={fold} tuning skipped: fewer than 2 training groups")
        return UNTUNED_SETTING[model_kind]
    inner_seed = _derive_seed(cfg.seed, repeat, fold, 1)
    inner_folds = stratified_group_kfold(y, groups, inner_k, inner_seed)
    best_setting = None
    best_score = -np.inf
    for setting in hyperparam_grid(model_kind):
        inner_aucs = []
        for i_fold, val_idx in enumerate(inner_folds):
            mask = np.ones(y.shape[0], dtype=bool)
            mask[val_idx] = False
            fit_idx = np.flatnonzero(mask)
            if len(np.unique(y[fit_idx])) < 2 or len(np.unique(y[val_idx])) < 2:
                continue
            std = fit_standardizer(X[fit_idx])
            model = _fit_model(
                model_kind,
                apply_standardizer(std, X[fit_idx]),
                y[fit_idx],
                setting,
                _derive_seed(cfg.seed, repeat, fold, 2, i_fold),
                train_cfg,
            )
            scores = decision_scores(model, apply_standardizer(std, X[val_idx]))
            inner_aucs.append(roc_auc(scores, y[val_idx]))
        score = float(np.mean(inner_aucs)) if inner_aucs else -1.0
        if score > best_score:
            best_score = score
            best_setting = setting
    if best_score < 0:
        warn(f"repeat={repeat} fold={fold} tuning degenerate: no valid inner fold")
    return best_setting


def run_cv(
    dataset: LabeledDataset,
    feature_method: str,
    model_kind: str,
    cfg: CVConfig | None = None,
    *,
    joint_cfg: JointDiagConfig | None = None,
    train_cfg: TrainConfig | None = None,
    task: str = "",
    collect_models: bool = False,
) -> EvalReport:
    """Run the full repeated-CV protocol and aggregate ROC AUC.

    Inductive default: the joint basis, the standardizer, and the tuned
    model are all fit on each training fold only; test matrices are
    projected onto the fold's basis.  With ``cfg.transductive`` the joint
    features are extracted once from the whole dataset first (the
    standardizer and model stay train-fold-only).

    Degenerate folds (single-class training or test fold) are skipped with
    a recorded warning; a repeat with no usable fold is dropped.  With
    ``collect_models`` the report carries every trained model's
    serialization, keyed by (repeat, fold), for leak audits.
    """
    if cfg is None:
        cfg = CVConfig()
    if feature_method not in FEATURE_METHODS:
        raise ValidationError(f"unknown feature method {feature_method!r}")
    if model_kind not in MODEL_KINDS:
        raise ValidationError(f"unknown model kind {model_kind!r}")
    if joint_cfg is None:
        joint_cfg = JointDiagConfig()
    if train_cfg is None:
        train_cfg = _default_train_cfg(model_kind)

    raw_labels = np.asarray(dataset.labels)
    if not np.all((raw_labels == 0) | (raw_labels == 1)) or len(np.unique(raw_labels)) < 2:
        raise ValidationError("evaluation needs binary {0,1} labels with both classes present")

    # Canonical sample order: everything downstream is keyed on ids.
    order = np.argsort(np.asarray(dataset.sample_ids), kind="stable")
    mats = dataset.matrices.matrices[order]
    labels = raw_labels[order]
    subjects = np.asarray(dataset.subject_ids)[order]
    sids = np.asarray(dataset.sample_ids)[order]
    n = labels.shape[0]
    split_groups = subjects if cfg.grouped else sids

    all_features = None
    if feature_method == "eigen":
        all_features = eigen_features(SymmetricMatrixSet(mats)).values
    elif cfg.transductive:
        fm, _ = joint_features(SymmetricMatrixSet(mats), joint_cfg)
        all_features = fm.values

    warnings_list: list[str] = []
    per_repeat: list[float] = []
    fold_models: list[tuple] = []

    for r in range(cfg.repeats):
        folds = stratified_group_kfold(labels, split_groups, cfg.folds, cfg.seed + r)
        fold_aucs = []
        for f, test_idx in enumerate(folds):
            mask = np.ones(n, dtype=bool)
            mask[test_idx] = False
            train_idx = np.flatnonzero(mask)
            if test_idx.size == 0:
                warnings_list.append(f"repeat={r} fold={f} skipped: empty test fold")
                continue
            y_train = labels[train_idx]
            y_test = labels[test_idx]
            if len(np.unique(y_train)) < 2:
                warnings_list.append(f"repeat={r} fold={f} skipped: single-class training fold")
                continue
            if len(np.unique(y_test)) < 2:
                warnings_list.append(f"repeat={r} fold={f} skipped: single-class test fold")
                continue

            if all_features is not None:
                x_train = all_features[train_idx]
                x_test = all_features[test_idx]
            else:
                res = run(SymmetricMatrixSet(mats[train_idx]), joint_cfg)
                x_train = res.diagonals
                x_test = np.stack([project_features(mats[i], res.basis) for i in test_idx])

            setting = _tune_setting(
                x_train,
                y_train,
                split_groups[train_idx],
                model_kind,
                cfg,
                train_cfg,
                r,
                f,
                warnings_list.append,
            )
            std = fit_standardizer(x_train)
            model = _fit_model(
                model_kind,
                apply_standardizer(std, x_train),
                y_train,
                setting,
                _derive_seed(cfg.seed, r, f, 3),
                train_cfg,
            )
            scores = decision_scores(model, apply_standardizer(std, x_test))
            fold_aucs.append(roc_auc(scores, y_test))
            if collect_models:
                fold_models.append((r, f, model_to_json(model)))
        if fold_aucs:
            per_repeat.append(float(np.mean(fold_aucs)))
        else:
            warnings_list.append(f"repeat={r} invalid: all folds skipped")

    if not per_repeat:
        raise ValidationError("evaluation produced no valid repeat (all folds degenerate)")
    return EvalReport(
        task=task,
        feature_method=feature_method,
        model_kind=model_kind,
        folds=cfg.folds,
        repeats=cfg.repeats,
        grouped=cfg.grouped,
        transductive=cfg.transductive,
        seed=cfg.seed,
        per_repeat_auc=tuple(per_repeat),
        mean_auc=float(np.mean(per_repeat)),
        std_auc=float(np.std(per_repeat)),
        warnings=tuple(warnings_list),
        fold_models=tuple(fold_models),
    )
