"""Approximate simultaneous diagonalization of a set of symmetric matrices.

One orthogonal basis U is driven by cyclic sweeps of plane rotations to
minimize the total off-diagonal energy F(U) = sum_i off(U.T A_i U).  For a
commuting set the minimum is zero and the common eigenbasis is recovered;
for real data the objective stalls at a positive value and the best
achieved basis is returned with ``converged`` reporting whether the target
off ratio was met.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import _sweep_stack_py, sweep_stack
from .errors import ValidationError
from .matrix_core import (
    SymmetricMatrixSet,
    _off_stack,
    check_orthogonal,
    congruence_diag,
    rotation_from_gram,
)

__all__ = ["JointDiagConfig", "JointDiagResult", "optimal_rotation", "sweep", "run", "canonicalize"]


@dataclass(frozen=True)
class JointDiagConfig:
    """Tolerances and policies for a joint-diagonalization run.

    rotation_tol   skip threshold on |sin theta|; rotations below it are
                   not applied
    off_tol        convergence target on F(U) / sum_i ||A_i||_F^2
    max_sweeps     hard cap on cyclic sweeps
    canonicalize   fix the column permutation/sign ambiguity of the result
    unit_frobenius rescale each matrix to unit Frobenius norm for the
                   objective only (reported diagonals always refer to the
                   original matrices); off by default
    reorth_every   project the accumulator back onto the orthogonal group
                   every this many sweeps (and always once at the end)
    verbose        emit one diagnostic line per sweep on stderr
    """

    rotation_tol: float = 1e-10
    off_tol: float = 1e-12
    max_sweeps: int = 100
    canonicalize: bool = True
    unit_frobenius: bool = False
    reorth_every: int = 30
    verbose: bool = False

    def __post_init__(self):
        if not self.rotation_tol > 0:
            raise ValidationError("rotation_tol must be > 0")
        if not self.off_tol > 0:
            raise ValidationError("off_tol must be > 0")
        if self.max_sweeps < 1:
            raise ValidationError("max_sweeps must be >= 1")


@dataclass(frozen=True)
class JointDiagResult:
    """Outcome of a run.

    basis           orthogonal d x d accumulator U
    diagonals       n x d array, row i = diag(U.T A_i U)
    off_history     F(U) before any sweep and after each sweep; non-increasing
    sweeps_used     number of sweeps performed
    converged       True when the final relative off ratio met off_tol
    stop_reason     which criterion ended the run: "off_tol", "stalled"
                    (a full sweep applied no rotation), or "max_sweeps"
    final_off_ratio the achieved F(U) / sum_i ||A_i||_F^2
    """

    basis: np.ndarray
    diagonals: np.ndarray
    off_history: np.ndarray
    sweeps_used: int
    converged: bool
    stop_reason: str
    final_off_ratio: float


def optimal_rotation(
    W: np.ndarray, p: int, q: int, rotation_tol: float = 0.0
) -> tuple[float, float]:
    """Best plane rotation (c, s) for the (p, q) plane across a matrix stack.

    Minimizes the summed squared (p, q) off-diagonal entry over all
    matrices in the (n, d, d) stack ``W``; guarantees c**2 + s**2 = 1 and
    c >= 1/sqrt(2).  Returns (1.0, 0.0) when the minimizing rotation has
    |sin theta| below ``rotation_tol``.
    """
    d = W.shape[-1]
    if not (0 <= p < q < d):
        raise ValidationError(f"invalid plane ({p}, {q}) for dimension {d}")
    h1 = W[:, p, p] - W[:, q, q]
    h2 = 2.0 * W[:, p, q]
    c, s = rotation_from_gram(float(h1 @ h1), float(h1 @ h2), float(h2 @ h2))
    if abs(s) < rotation_tol:
        return 1.0, 0.0
    return c, s


def sweep(W: np.ndarray, U: np.ndarray, cfg: JointDiagConfig) -> int:
    """One cyclic pass over all planes (p, q), p < q, in place.

    Each applied rotation (the same closed-form angle ``optimal_rotation``
    computes) updates every matrix in the stack ``W`` by congruence and
    right-multiplies the accumulator ``U``.  Returns the number of
    rotations applied.  F(U) never increases across a sweep.
    """
    if (
        W.dtype == np.float64
        and U.dtype == np.float64
        and W.flags.c_contiguous
        and U.flags.c_contiguous
    ):
        return int(sweep_stack(W, U, cfg.rotation_tol))
    return _sweep_stack_py(W, U, cfg.rotation_tol)


def _nearest_orthogonal(U: np.ndarray) -> np.ndarray:
    """Polar projection onto the orthogonal group."""
    u, _, vt = np.linalg.svd(U)
    return u @ vt


def run(S: SymmetricMatrixSet, cfg: JointDiagConfig | None = None) -> JointDiagResult:
    """Jointly diagonalize a symmetric matrix set by cyclic plane-rotation sweeps.

    Sweeps continue until the relative off ratio meets ``cfg.off_tol``, a
    full sweep applies zero rotations (stall), or ``cfg.max_sweeps`` is
    reached.  Non-convergence is reported in the result rather than raised:
    near-commuting data legitimately stalls above the target and the
    achieved basis is still the useful output.  The input set is never
    mutated.
    """
    if cfg is None:
        cfg = JointDiagConfig()
    originals = S.matrices
    W = originals.copy()
    if cfg.unit_frobenius:
        norms = np.linalg.norm(W, axis=(1, 2))
        norms[norms == 0.0] = 1.0
        W /= norms[:, None, None]
    d = S.dim
    U = np.eye(d)
    total = float(np.sum(W * W))
    off = _off_stack(W)
    history = [off]
    ratio = off / total if total > 0.0 else 0.0
    sweeps_used = 0
    if ratio <= cfg.off_tol:
        reason = "off_tol"
    else:
        reason = "max_sweeps"
        for t in range(1, cfg.max_sweeps + 1):
            rotations = sweep(W, U, cfg)
            sweeps_used = t
            off = _off_stack(W)
            history.append(off)
            ratio = off / total if total > 0.0 else 0.0
            if cfg.verbose:
                print(
                    f"sweep={t} off_ratio={ratio:.6e} rotations={rotations}",
                    file=sys.stderr,
                )
            if ratio <= cfg.off_tol:
                reason = "off_tol"
                break
            if rotations == 0:
                reason = "stalled"
                break
            if cfg.reorth_every and t % cfg.reorth_every == 0:
                U = _nearest_orthogonal(U)
    U = _nearest_orthogonal(U)
    check_orthogonal(U)
    diagonals = np.stack([congruence_diag(U, A) for A in originals])
    result = JointDiagResult(
        basis=U,
        diagonals=diagonals,
        off_history=np.asarray(history),
        sweeps_used=sweeps_used,
        converged=ratio <= cfg.off_tol,
        stop_reason=reason,
        final_off_ratio=ratio,
    )
    if cfg.canonicalize:
        result = canonicalize(result)
        # Recompute rows against the canonical basis so that projecting a
        # training matrix later reproduces its feature row bit-for-bit.
        diagonals = np.stack([congruence_diag(result.basis, A) for A in originals])
        result = replace(result, diagonals=diagonals)
    return result


def _canonical_permutation(diagonals: np.ndarray) -> list[int]:
    """Column order: descending mean diagonal, ties broken by the first
    differing per-matrix diagonal value, then original column index."""
    means = diagonals.mean(axis=0)

    def key(k: int):
        return (-means[k], tuple(-diagonals[:, k]), k)

    return sorted(range(diagonals.shape[1]), key=key)


def canonicalize(result: JointDiagResult) -> JointDiagResult:
    """Fix the permutation/sign ambiguity of a diagonalizing basis.

    Columns are reordered by descending mean diagonal value across the
    set; each column's sign is flipped so its largest-magnitude entry is
    positive.  Diagonal rows are permuted consistently (their values are
    invariant to column sign).  F(U) is unchanged.  Idempotent.
    """
    perm = _canonical_permutation(result.diagonals)
    basis = result.basis[:, perm].copy()
    for k in range(basis.shape[1]):
        col = basis[:, k]
        j = int(np.argmax(np.abs(col)))
        if col[j] < 0.0:
            basis[:, k] = -col
    return replace(result, basis=basis, diagonals=result.diagonals[:, perm])
