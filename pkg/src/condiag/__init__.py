"""condiag: joint-diagonalization spectral features for symmetric network
matrices, plus a cross-validated linear-classification harness.

The pipeline: a set of symmetric adjacency matrices is approximately
simultaneously diagonalized by plane-rotation sweeps; the per-matrix
diagonals in the shared basis become feature vectors, evaluated against a
per-matrix eigenvalue baseline with linear models under repeated
stratified (optionally subject-grouped) cross-validation scored by ROC
AUC.
"""

from .classify import (
    LinearModel,
    TrainConfig,
    decision_scores,
    hyperparam_grid,
    model_from_json,
    model_to_json,
    predict_proba,
    train_logreg,
    train_sgd_elasticnet,
)
from .errors import (
    CondiagError,
    ConvergenceError,
    FormatError,
    TrainingError,
    ValidationError,
)
from .evaluation import (
    CVConfig,
    EvalReport,
    LabeledDataset,
    roc_auc,
    run_cv,
    stratified_group_kfold,
)
from .features import (
    FeatureMatrix,
    Standardizer,
    apply_standardizer,
    eigen_features,
    fit_standardizer,
    joint_features,
    project_features,
)
from .joint_diag import JointDiagConfig, JointDiagResult, canonicalize, optimal_rotation, sweep
from .joint_diag import run as joint_diagonalize
from .matrix_core import (
    SymmetricMatrixSet,
    commutation_residual,
    congruence,
    congruence_diag,
    jacobi_eigen,
    off_value,
    symmetrize,
)
from .synth import SynthSpec, SynthTruth, generate, random_orthogonal, separable_class_means

__version__ = "0.1.0"
