import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from condiag import SymmetricMatrixSet, random_orthogonal


def rand_sym(rng, d, scale=1.0):
    """Random exactly-symmetric matrix with N(0, scale^2) entries."""
    G = rng.standard_normal((d, d)) * scale
    return (G + G.T) / 2.0


def common_basis_stack(rng, n, d, low=-5.0, high=5.0, seed_basis=None):
    """Commuting ensemble built from one random orthogonal basis.

    Returns (stack, basis, diagonals) with stack[i] = U diag(D[i]) U^T,
    exactly symmetric.
    """
    basis = random_orthogonal(d, rng if seed_basis is None else seed_basis)
    diags = rng.uniform(low, high, size=(n, d))
    stack = np.stack([(basis * row) @ basis.T for row in diags])
    stack = (stack + stack.transpose(0, 2, 1)) / 2.0
    return stack, basis, diags


def brute_force_auc(scores, labels):
    """O(m^2) pairwise concordance count, ties worth one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def align_columns(recovered, truth):
    """Best single global column permutation matching recovered to truth.

    Both are (n, d) diagonal-feature arrays; returns recovered with its
    columns reordered to minimize the total squared mismatch.
    """
    cost = np.empty((truth.shape[1], recovered.shape[1]))
    for a in range(truth.shape[1]):
        for b in range(recovered.shape[1]):
            cost[a, b] = np.sum((truth[:, a] - recovered[:, b]) ** 2)
    _, cols = linear_sum_assignment(cost)
    return recovered[:, cols]


def near_identity_orthogonal(rng, d, eps):
    """Cayley transform of a small random skew matrix: exactly orthogonal."""
    G = rng.standard_normal((d, d)) * eps
    S = (G - G.T) / 2.0
    I = np.eye(d)
    return np.linalg.solve(I + S, I - S)


@pytest.fixture
def rng():
    return np.random.default_rng(20240115)


def make_set(stack):
    return SymmetricMatrixSet(np.asarray(stack))
