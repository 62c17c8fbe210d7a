"""Feature extraction from symmetric matrix sets.

Two routes to a fixed-length vector per matrix: the diagonal of each
matrix expressed in one shared basis found by joint diagonalization
(columns are comparable across samples), and the per-matrix sorted
eigenvalue spectrum (columns are rank positions).  Plus a train-fold-fit
z-score standardizer for the linear models downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .joint_diag import JointDiagConfig, JointDiagResult, run
from .matrix_core import SymmetricMatrixSet, congruence_diag, jacobi_eigen

__all__ = [
    "FeatureMatrix",
    "Standardizer",
    "joint_features",
    "project_features",
    "eigen_features",
    "fit_standardizer",
    "apply_standardizer",
]


@dataclass(frozen=True)
class FeatureMatrix:
    """n x d feature values plus a tag saying how to read the columns."""

    values: np.ndarray
    method: str  # "joint_diag" or "eigen"
    column_meaning: str  # "shared-basis direction" or "rank position"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError(f"feature values must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("feature values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def joint_features(
    S: SymmetricMatrixSet, cfg: JointDiagConfig | None = None
) -> tuple[FeatureMatrix, JointDiagResult]:
    """Shared-basis diagonal features: row i = diag(U.T A_i U), canonical order.

    The run result rides along so callers can inspect convergence (a
    non-converged run still yields usable features; policy is theirs).
    """
    if cfg is None:
        cfg = JointDiagConfig()
    result = run(S, cfg)
    fm = FeatureMatrix(
        values=result.diagonals, method="joint_diag", column_meaning="shared-basis direction"
    )
    return fm, result


def project_features(A: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """diag(basis.T @ A @ basis) for a single matrix, in the basis's column order.

    For a matrix that was part of the set the basis was fit on, this
    reproduces its joint_features row exactly (same computation).
    """
    return congruence_diag(basis, A)


def eigen_features(S: SymmetricMatrixSet) -> FeatureMatrix:
    """Per-matrix eigenvalue features: row i = spectrum of A_i, descending."""
    rows = np.empty((S.count, S.dim))
    for i, A in enumerate(S.matrices):
        vals, _ = jacobi_eigen(A)
        rows[i] = vals
    return FeatureMatrix(values=rows, method="eigen", column_meaning="rank position")


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-score transform fitted on a row subset."""

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        scale = np.asarray(self.scale, dtype=np.float64)
        if mean.shape != scale.shape or mean.ndim != 1:
            raise ValidationError("mean and scale must be 1-D and the same length")
        if not np.all(scale > 0):
            raise ValidationError("scale entries must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)


def fit_standardizer(features, row_subset=None) -> Standardizer:
    """Fit per-column mean/scale on the given rows only.

    ``features`` may be a FeatureMatrix or a plain 2-D array.  Zero-variance
    columns get scale 1 so constant features map to zeros instead of NaN.
    """
    values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features)
    if row_subset is None:
        rows = values
    else:
        idx = np.asarray(row_subset)
        if idx.size == 0:
            raise ValidationError("row subset must be nonempty")
        rows = values[idx]
    if rows.shape[0] == 0:
        raise ValidationError("row subset must be nonempty")
    mean = rows.mean(axis=0)
    scale = rows.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return Standardizer(mean=mean, scale=scale)


def apply_standardizer(standardizer: Standardizer, rows) -> np.ndarray:
    """(x - mean) / scale, computed from fitted statistics only."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[-1] != standardizer.mean.shape[0]:
        raise ValidationError(
            f"column count {rows.shape[-1]} does not match fitted width "
            f"{standardizer.mean.shape[0]}"
        )
    return (rows - standardizer.mean) / standardizer.scale
