"""Synthetic ground-truth ensembles for oracle tests and benchmarks.

Every sample is built as A_i = U0 D_i U0^T from one shared random
orthogonal basis U0 and a class-dependent random diagonal D_i, optionally
plus symmetric noise scaled relative to each matrix's Frobenius norm.
With zero noise the set commutes exactly, so the joint diagonalizer must
recover the generating diagonals; with noise it degrades gracefully and
the stored truth quantifies by how much.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .evaluation import LabeledDataset
from .matrix_core import SymmetricMatrixSet, check_orthogonal

__all__ = ["SynthSpec", "SynthTruth", "random_orthogonal", "generate", "separable_class_means"]


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters.

    class_means holds one length-``dim`` vector per class; sample i of
    class c draws its diagonal uniformly from class_means[c] +/- spread
    per entry.  ``sigma`` adds symmetric Gaussian noise with Frobenius
    norm sigma * ||A_i||_F (relative, so signal-to-noise reads the same
    across diagonal magnitudes).
    """

    dim: int
    class_counts: tuple
    class_means: tuple
    spread: float
    sigma: float
    seed: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValidationError("dim must be >= 2")
        counts = tuple(int(c) for c in self.class_counts)
        if len(counts) < 1 or any(c < 1 for c in counts):
            raise ValidationError("need at least one sample per class")
        means = tuple(np.asarray(m, dtype=np.float64) for m in self.class_means)
        if len(means) != len(counts):
            raise ValidationError("class_means and class_counts must have equal length")
        if any(m.shape != (self.dim,) for m in means):
            raise ValidationError(f"each class mean must be a length-{self.dim} vector")
        if self.spread < 0 or self.sigma < 0:
            raise ValidationError("spread and sigma must be >= 0")
        object.__setattr__(self, "class_counts", counts)
        object.__setattr__(self, "class_means", means)


@dataclass(frozen=True)
class SynthTruth:
    """What the generator actually used: the shared basis and per-sample diagonals."""

    basis: np.ndarray
    diagonals: np.ndarray

    def __post_init__(self):
        check_orthogonal(self.basis)


def random_orthogonal(dim: int, seed) -> np.ndarray:
    """Approximately rotation-invariant random orthogonal matrix.

    QR of a standard Gaussian matrix with the R-diagonal sign convention,
    which makes the draw deterministic per seed and Haar-distributed.
    ``seed`` may be an int or an existing Generator.
    """
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    G = rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diagonal(R))
    signs[signs == 0.0] = 1.0
    Q = Q * signs
    check_orthogonal(Q)
    return Q


def generate(spec: SynthSpec) -> tuple[LabeledDataset, SynthTruth]:
    """Build a labeled dataset of common-basis symmetric matrices.

    Deterministic per seed; doubling sigma exactly doubles the noise term
    added to each sample (the noise draw does not depend on sigma).
    Subject ids are unique per sample.
    """
    rng = np.random.default_rng(spec.seed)
    basis = random_orthogonal(spec.dim, rng)
    n = sum(spec.class_counts)
    diagonals = np.empty((n, spec.dim))
    labels = np.empty(n, dtype=np.int64)
    mats = np.empty((n, spec.dim, spec.dim))
    i = 0
    for cls, (count, mean) in enumerate(zip(spec.class_counts, spec.class_means)):
        for _ in range(count):
            diag = mean + rng.uniform(-spec.spread, spec.spread, size=spec.dim)
            clean = (basis * diag) @ basis.T
            clean = (clean + clean.T) / 2.0
            noise = rng.standard_normal((spec.dim, spec.dim))
            noise = (noise + noise.T) / 2.0
            noise_norm = float(np.linalg.norm(noise))
            if noise_norm > 0.0:
                scaled = (spec.sigma * float(np.linalg.norm(clean)) / noise_norm) * noise
            else:
                scaled = noise
            mats[i] = clean + scaled
            diagonals[i] = diag
            labels[i] = cls
            i += 1
    width = max(4, len(str(n)))
    sample_ids = tuple(f"s{j:0{width}d}" for j in range(n))
    subject_ids = tuple(f"subj{j:0{width}d}" for j in range(n))
    dataset = LabeledDataset(
        matrices=SymmetricMatrixSet(mats),
        labels=labels,
        subject_ids=subject_ids,
        sample_ids=sample_ids,
    )
    return dataset, SynthTruth(basis=basis, diagonals=diagonals)


def separable_class_means(
    dim: int,
    informative: int,
    gap: float,
    seed,
    base_low: float = -2.0,
    base_high: float = 2.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Two class-mean vectors differing by ``gap`` in the first ``informative``
    coordinates of a shared random base vector."""
    if not 0 < informative <= dim:
        raise ValidationError("informative must lie in [1, dim]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    base = rng.uniform(base_low, base_high, size=dim)
    shifted = base.copy()
    shifted[:informative] += gap
    return base, shifted
