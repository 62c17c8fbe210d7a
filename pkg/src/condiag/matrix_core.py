"""Dense real symmetric matrix primitives.

Everything downstream (the joint diagonalizer, the feature extractors)
is built on the small kernel defined here: symmetrization, off-diagonal
energy, orthogonal congruence, plane rotations, and a cyclic-Jacobi
eigensolver for a single matrix.  The single-matrix solver deliberately
shares its rotation kernel with the joint solver so it can serve as an
in-repo oracle for the n=1 case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import sweep_stack
from .errors import ConvergenceError, ValidationError

__all__ = [
    "SymmetricMatrixSet",
    "symmetrize",
    "off_value",
    "congruence",
    "congruence_diag",
    "jacobi_eigen",
    "commutation_residual",
    "check_orthogonal",
    "rotation_from_gram",
    "rotate_congruence_inplace",
    "rotate_columns_inplace",
]

ORTHOGONALITY_TOL = 1e-10


def _as_square(raw, name: str = "matrix") -> np.ndarray:
    """Validate a square, finite, real 2-D array and return a float64 copy."""
    M = np.array(raw, dtype=np.float64, copy=True)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square 2-D, got shape {M.shape}")
    bad = np.argwhere(~np.isfinite(M))
    if bad.size:
        k, l = bad[0]
        raise ValidationError(f"{name} has non-finite entry at ({k}, {l})")
    return M


def symmetrize(raw, asymmetry_tol: float = 1e-8) -> tuple[np.ndarray, bool]:
    """Return ((raw + raw.T)/2, warned).

    ``warned`` is True when the input deviates from symmetry by more than
    ``asymmetry_tol`` in any entry.  Asymmetry is never an error: nominally
    symmetric connectivity files may carry roundoff, so callers decide what
    to do with the flag.
    """
    M = _as_square(raw)
    max_asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    # IEEE addition is commutative, so (M + M.T)/2 is exactly symmetric.
    sym = (M + M.T) / 2.0
    return sym, max_asym > asymmetry_tol


def off_value(M) -> float:
    """Sum of squares of the strictly off-diagonal entries of a square matrix.

    Summed directly over the off-diagonal entries (not as total minus
    diagonal energy) so the result is exactly nonnegative and free of
    cancellation when the matrix is nearly diagonal.
    """
    M = _as_square(M)
    X = M.copy()
    np.fill_diagonal(X, 0.0)
    return float(np.sum(X * X))


def _off_stack(W: np.ndarray) -> float:
    """off_value summed over a stack of square matrices, no validation."""
    X = W.copy()
    idx = np.arange(W.shape[-1])
    X[..., idx, idx] = 0.0
    return float(np.sum(X * X))


def check_orthogonal(U: np.ndarray, tol: float = ORTHOGONALITY_TOL) -> None:
    """Raise unless max-norm(U.T @ U - I) <= tol."""
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValidationError(f"basis must be square, got shape {U.shape}")
    drift = float(np.max(np.abs(U.T @ U - np.eye(U.shape[0]))))
    if not drift <= tol:
        raise ValidationError(f"basis is not orthogonal: drift {drift:.3e} > {tol:.3e}")


def congruence(U: np.ndarray, A) -> np.ndarray:
    """U.T @ A @ U for orthogonal U, re-symmetrized to kill roundoff asymmetry."""
    A = _as_square(A)
    U = np.asarray(U, dtype=np.float64)
    if U.shape != A.shape:
        raise ValidationError(f"dimension mismatch: basis {U.shape} vs matrix {A.shape}")
    B = U.T @ A @ U
    return (B + B.T) / 2.0


def congruence_diag(U: np.ndarray, A: np.ndarray) -> np.ndarray:
    """diag(U.T @ A @ U) without forming the full product.

    The exact same code path is used when features are extracted during a
    joint-diagonalization run and when an unseen matrix is projected onto
    an existing basis, so the two agree bit-for-bit on identical inputs.
    """
    U = np.asarray(U, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if U.shape != A.shape or U.ndim != 2:
        raise ValidationError(f"dimension mismatch: basis {U.shape} vs matrix {A.shape}")
    V = A @ U
    return np.einsum("ji,ji->i", U, V)


def rotation_from_gram(g11: float, g12: float, g22: float) -> tuple[float, float]:
    """Cosine/sine of the plane rotation from an accumulated 2x2 Gram matrix.

    For a pair (p, q), each matrix contributes h = (a_pp - a_qq, 2 a_pq);
    G = sum h h^T is symmetric PSD.  The rotation angle theta is half the
    angle of G's dominant eigenvector (x, y) taken with x >= 0, which
    maximizes the summed squared diagonal gap in the plane, i.e. minimizes
    the plane's off-diagonal contribution.  Guarantees c >= 1/sqrt(2)
    (|theta| <= pi/4).  A zero G yields the identity rotation.
    """
    ton = g11 - g22
    toff = 2.0 * g12
    if ton == 0.0 and toff == 0.0 and g11 == 0.0 and g22 == 0.0:
        return 1.0, 0.0
    # Dominant eigenvector angle: tan(2 psi) = toff / ton, principal branch
    # psi in (-pi/2, pi/2] so x = cos(psi) >= 0 automatically.
    psi = 0.5 * math.atan2(toff, ton)
    x = math.cos(psi)
    y = math.sin(psi)
    # r = 1 by construction; the half-angle closed form never degenerates
    # because x + 1 >= 1.
    c = math.sqrt((x + 1.0) / 2.0)
    s = y / math.sqrt(2.0 * (x + 1.0))
    return c, s


def rotate_congruence_inplace(W: np.ndarray, p: int, q: int, c: float, s: float) -> None:
    """Apply J.T @ A @ J in the (p, q) plane to a matrix or stack, in place.

    J is the identity except J[p,p]=J[q,q]=c, J[p,q]=-s, J[q,p]=s.  ``W``
    may be a single (d, d) matrix or an (n, d, d) stack.
    """
    colp = c * W[..., :, p] + s * W[..., :, q]
    colq = -s * W[..., :, p] + c * W[..., :, q]
    W[..., :, p] = colp
    W[..., :, q] = colq
    rowp = c * W[..., p, :] + s * W[..., q, :]
    rowq = -s * W[..., p, :] + c * W[..., q, :]
    W[..., p, :] = rowp
    W[..., q, :] = rowq


def rotate_columns_inplace(U: np.ndarray, p: int, q: int, c: float, s: float) -> None:
    """Right-multiply U by the same plane rotation J, in place."""
    colp = c * U[:, p] + s * U[:, q]
    colq = -s * U[:, p] + c * U[:, q]
    U[:, p] = colp
    U[:, q] = colq


def jacobi_eigen(
    A, tol: float = 1e-15, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.

    Returns (eigenvalues sorted descending, basis) with basis columns the
    corresponding eigenvectors, so basis.T @ A @ basis is diagonal to within
    ``tol`` (off_value <= tol * ||A||_F^2).

    Raises ConvergenceError (carrying the achieved off ratio) if the target
    is not met within ``max_sweeps``; quadratic convergence makes that
    unreachable in practice for finite symmetric input at sane tolerances.
    """
    W = _as_square(A)
    if not np.array_equal(W, W.T):
        W = (W + W.T) / 2.0
    d = W.shape[0]
    U = np.eye(d)
    total = float(np.sum(W * W))
    if total == 0.0 or d == 1:
        vals = np.diagonal(W).copy()
        return vals, U
    stack = np.ascontiguousarray(W[None, :, :])
    ratio = _off_stack(stack) / total
    sweeps = 0
    while ratio > tol:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"jacobi_eigen: off ratio {ratio:.3e} > tol {tol:.3e} "
                f"after {max_sweeps} sweeps",
                off_ratio=ratio,
            )
        sweep_stack(stack, U, 0.0)
        sweeps += 1
        ratio = _off_stack(stack) / total
    vals = stack[0].diagonal().copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], U[:, order]


@dataclass(frozen=True)
class SymmetricMatrixSet:
    """An ordered set of n real symmetric d x d matrices sharing one node indexing.

    ``matrices`` is an (n, d, d) float64 stack, exactly symmetric entry-wise
    and read-only after construction.
    """

    matrices: np.ndarray

    def __post_init__(self):
        stack = np.array(self.matrices, dtype=np.float64, copy=True)
        if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
            raise ValidationError(
                f"matrix set must be an (n, d, d) stack, got shape {stack.shape}"
            )
        if stack.shape[0] < 1:
            raise ValidationError("matrix set must contain at least one matrix")
        if not np.all(np.isfinite(stack)):
            idx = np.argwhere(~np.isfinite(stack))[0]
            raise ValidationError(f"non-finite entry at (matrix {idx[0]}, {idx[1]}, {idx[2]})")
        if not np.array_equal(stack, stack.transpose(0, 2, 1)):
            i = int(
                np.argwhere(np.any(stack != stack.transpose(0, 2, 1), axis=(1, 2)))[0][0]
            )
            raise ValidationError(f"matrix {i} is not exactly symmetric; symmetrize first")
        stack.setflags(write=False)
        object.__setattr__(self, "matrices", stack)

    @property
    def count(self) -> int:
        return self.matrices.shape[0]

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def __len__(self) -> int:
        return self.count

    def subset(self, indices) -> "SymmetricMatrixSet":
        """New set containing the selected matrices, in the given order."""
        return SymmetricMatrixSet(self.matrices[np.asarray(indices)])


def commutation_residual(S: SymmetricMatrixSet) -> float:
    """Worst-case normalized commutator over all pairs in the set.

    max over i < j of ||A_i A_j - A_j A_i||_F / (||A_i||_F ||A_j||_F),
    with 0/0 treated as 0.  Zero means the set commutes and is therefore
    exactly simultaneously diagonalizable.
    """
    if S.count < 2:
        raise ValidationError("commutation residual needs at least two matrices")
    mats = S.matrices
    norms = np.linalg.norm(mats, axis=(1, 2))
    worst = 0.0
    for i in range(S.count - 1):
        Ai = mats[i]
        for j in range(i + 1, S.count):
            num = float(np.linalg.norm(Ai @ mats[j] - mats[j] @ Ai))
            den = float(norms[i] * norms[j])
            if den == 0.0:
                continue  # 0/0 pair contributes 0
            worst = max(worst, num / den)
    return worst
