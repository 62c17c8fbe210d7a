"""On-disk dataset format, manifest handling, and experiment orchestration.

Matrix files are plain text: d rows of d whitespace-separated decimals
written with 17 significant digits (so a write/read round trip is
bit-exact), optionally preceded by a ``# dim=<d>`` comment line.  The
manifest is a TSV with header ``path<TAB>sample_id<TAB>subject_id<TAB>label``;
paths are resolved relative to the manifest's directory.
"""

from __future__ import annotations

import os
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError, CondiagError
from .evaluation import CVConfig, EvalReport, LabeledDataset, run_cv
from .joint_diag import JointDiagConfig
from .matrix_core import SymmetricMatrixSet, symmetrize

__all__ = [
    "Manifest",
    "ManifestRecord",
    "ExperimentConfig",
    "AsymmetryWarning",
    "parse_task",
    "read_matrix",
    "write_matrix",
    "parse_manifest",
    "write_dataset",
    "load_dataset",
    "load_matrix_set",
    "write_features_csv",
    "run_experiment",
    "atomic_write_text",
]

MANIFEST_HEADER = "path\tsample_id\tsubject_id\tlabel"
CLINICAL_LABELS = frozenset({"AD", "LMCI", "EMCI", "NC"})
CLINICAL_TASKS = ("AD-vs-NC", "AD-vs-LMCI", "LMCI-vs-EMCI", "EMCI-vs-NC")


class AsymmetryWarning(UserWarning):
    """A nominally symmetric matrix file deviated beyond the tolerance."""


def parse_task(task: str):
    """Split ``"POS-vs-NEG"`` into (positive label, negative label, vocabulary).

    The first label maps to class 1.  For the four clinical pairings the
    known label vocabulary is returned so typos in manifests are caught;
    custom pairings skip that check (extra labels are simply filtered out).
    """
    parts = task.split("-vs-")
    if len(parts) != 2 or not parts[0] or not parts[1]:
        raise FormatError(f"task must look like 'POS-vs-NEG', got {task!r}")
    pos, neg = parts
    if pos == neg:
        raise FormatError(f"task classes must differ, got {task!r}")
    vocab = CLINICAL_LABELS if {pos, neg} <= CLINICAL_LABELS else None
    return pos, neg, vocab


def atomic_write_text(path, text: str) -> None:
    """Write a file via a temp file in the same directory plus rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_matrix(M: np.ndarray) -> str:
    d = M.shape[0]
    lines = [f"# dim={d}"]
    for row in M:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_matrix(path, M: np.ndarray) -> None:
    atomic_write_text(path, format_matrix(np.asarray(M, dtype=np.float64)))


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"matrix file not found: {path}")
    try:
        M = np.loadtxt(path, comments="#", ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise FormatError(f"cannot parse matrix file {path}: {e}") from e
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise FormatError(f"matrix file {path} is not square: shape {M.shape}")
    return M


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    sample_id: str
    subject_id: str
    label: str


@dataclass(frozen=True)
class Manifest:
    records: tuple
    base_dir: Path

    def resolve(self, record: ManifestRecord) -> Path:
        p = Path(record.path)
        return p if p.is_absolute() else self.base_dir / p


def parse_manifest(path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"manifest not found: {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0] != MANIFEST_HEADER:
        raise FormatError(
            f"manifest {path} must start with header {MANIFEST_HEADER.replace(chr(9), '<TAB>')!r}"
        )
    records = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise FormatError(f"manifest {path} line {lineno}: expected 4 tab-separated fields")
        rec = ManifestRecord(*[f.strip() for f in fields])
        if not rec.sample_id or not rec.subject_id or not rec.label or not rec.path:
            raise FormatError(f"manifest {path} line {lineno}: empty field")
        if rec.sample_id in seen:
            raise FormatError(f"manifest {path} line {lineno}: duplicate sample id {rec.sample_id!r}")
        seen.add(rec.sample_id)
        records.append(rec)
    if not records:
        raise FormatError(f"manifest {path} contains no records")
    return Manifest(records=tuple(records), base_dir=path.parent)


def _load_records(
    manifest: Manifest, records, asymmetry_tol: float, normalize: bool
) -> np.ndarray:
    mats = []
    dim = None
    for rec in records:
        M = read_matrix(manifest.resolve(rec))
        if dim is None:
            dim = M.shape[0]
        elif M.shape[0] != dim:
            raise ValidationError(
                f"sample {rec.sample_id!r}: dimension {M.shape[0]} differs from first matrix ({dim})"
            )
        sym, warned = symmetrize(M, asymmetry_tol)
        if warned:
            warnings.warn(
                f"sample {rec.sample_id!r}: asymmetry above {asymmetry_tol:g}, symmetrized",
                AsymmetryWarning,
            )
        if normalize:
            norm = float(np.linalg.norm(sym))
            if norm > 0.0:
                sym = sym / norm
        mats.append(sym)
    return np.stack(mats)


def load_dataset(
    manifest_path,
    task: str,
    asymmetry_tol: float = 1e-8,
    normalize: bool = False,
) -> LabeledDataset:
    """Load the samples of a binary task from a manifest.

    Only rows whose label belongs to the task pairing are kept (order =
    manifest order); the positive/first label maps to 1.  Matrices are
    symmetrized on ingestion, warning when asymmetry exceeds the tolerance.
    """
    pos, neg, vocab = parse_task(task)
    manifest = parse_manifest(manifest_path)
    if vocab is not None:
        for rec in manifest.records:
            if rec.label not in vocab:
                raise ValidationError(
                    f"sample {rec.sample_id!r}: unknown label {rec.label!r} "
                    f"(expected one of {sorted(vocab)})"
                )
    picked = [rec for rec in manifest.records if rec.label in (pos, neg)]
    n_pos = sum(1 for rec in picked if rec.label == pos)
    n_neg = len(picked) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError(
            f"task {task!r} needs both classes: found {n_pos} x {pos!r}, {n_neg} x {neg!r}"
        )
    mats = _load_records(manifest, picked, asymmetry_tol, normalize)
    return LabeledDataset(
        matrices=SymmetricMatrixSet(mats),
        labels=np.array([1 if rec.label == pos else 0 for rec in picked], dtype=np.int64),
        subject_ids=tuple(rec.subject_id for rec in picked),
        sample_ids=tuple(rec.sample_id for rec in picked),
    )


def load_matrix_set(
    manifest_path, asymmetry_tol: float = 1e-8, normalize: bool = False
):
    """Load every matrix in a manifest, ignoring labels.

    Returns (SymmetricMatrixSet, manifest records) in manifest order.
    """
    manifest = parse_manifest(manifest_path)
    mats = _load_records(manifest, manifest.records, asymmetry_tol, normalize)
    return SymmetricMatrixSet(mats), manifest.records


def write_dataset(dataset: LabeledDataset, out_dir, label_names: dict) -> Path:
    """Write matrices plus manifest under ``out_dir``; returns the manifest path."""
    out_dir = Path(out_dir)
    (out_dir / "matrices").mkdir(parents=True, exist_ok=True)
    lines = [MANIFEST_HEADER]
    for i in range(dataset.count):
        rel = f"matrices/{dataset.sample_ids[i]}.txt"
        write_matrix(out_dir / rel, dataset.matrices.matrices[i])
        label = label_names[int(dataset.labels[i])]
        lines.append(f"{rel}\t{dataset.sample_ids[i]}\t{dataset.subject_ids[i]}\t{label}")
    manifest_path = out_dir / "manifest.tsv"
    atomic_write_text(manifest_path, "\n".join(lines) + "\n")
    return manifest_path


def write_features_csv(path, dataset: LabeledDataset, values: np.ndarray) -> None:
    """Feature export: one row per sample, ``sample_id,subject_id,label,f_0,...``."""
    values = np.asarray(values)
    if values.shape[0] != dataset.count:
        raise ValidationError("feature rows must match the dataset sample count")
    cols = values.shape[1]
    lines = ["sample_id,subject_id,label," + ",".join(f"f_{j}" for j in range(cols))]
    for i in range(dataset.count):
        front = f"{dataset.sample_ids[i]},{dataset.subject_ids[i]},{int(dataset.labels[i])}"
        lines.append(front + "," + ",".join(f"{v:.17g}" for v in values[i]))
    atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one evaluation run needs, including output paths."""

    manifest_path: str
    task: str
    feature_method: str = "joint_diag"
    model_kind: str = "logreg"
    cv: CVConfig = field(default_factory=CVConfig)
    joint: JointDiagConfig = field(default_factory=JointDiagConfig)
    asymmetry_tol: float = 1e-8
    normalize: bool = False
    out_json: str | None = None
    out_csv: str | None = None


def _staged(stage: str, exc: CondiagError) -> CondiagError:
    wrapped = type(exc)(f"{stage}: {exc}")
    wrapped.__dict__.update(exc.__dict__)
    return wrapped


def run_experiment(cfg: ExperimentConfig) -> EvalReport:
    """Load -> extract features -> cross-validate -> write report files.

    Component errors are re-raised with the failing stage prepended.  The
    JSON report is byte-identical across runs with the same config.
    """
    try:
        dataset = load_dataset(
            cfg.manifest_path, cfg.task, asymmetry_tol=cfg.asymmetry_tol, normalize=cfg.normalize
        )
    except CondiagError as e:
        raise _staged("load", e) from e
    try:
        report = run_cv(
            dataset,
            cfg.feature_method,
            cfg.model_kind,
            cfg.cv,
            joint_cfg=cfg.joint,
            task=cfg.task,
        )
    except CondiagError as e:
        raise _staged("evaluate", e) from e
    if cfg.out_json:
        atomic_write_text(cfg.out_json, report.to_json() + "\n")
    if cfg.out_csv:
        atomic_write_text(cfg.out_csv, report.to_csv())
    return report
