"""Unit and property tests for the symmetric-matrix primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condiag import (
    ConvergenceError,
    ValidationError,
    commutation_residual,
    congruence,
    congruence_diag,
    jacobi_eigen,
    off_value,
    random_orthogonal,
    symmetrize,
)
from condiag.matrix_core import rotate_columns_inplace, rotate_congruence_inplace

from conftest import make_set, rand_sym


class TestSymmetrize:
    def test_identity_unchanged_no_warning(self):
        M, warned = symmetrize(np.eye(3), asymmetry_tol=1e-9)
        np.testing.assert_array_equal(M, np.eye(3))
        assert not warned

    def test_upper_triangular_averaged_with_warning(self):
        M, warned = symmetrize([[0.0, 2.0], [0.0, 0.0]], asymmetry_tol=1e-9)
        np.testing.assert_array_equal(M, [[0.0, 1.0], [1.0, 0.0]])
        assert warned

    def test_symmetric_input_unchanged(self):
        raw = [[1.0, 2.0], [2.0, 1.0]]
        M, warned = symmetrize(raw, asymmetry_tol=1e-9)
        np.testing.assert_array_equal(M, raw)
        assert not warned

    def test_non_square_rejected(self):
        with pytest.raises(ValidationError):
            symmetrize(np.ones((2, 3)))

    def test_non_finite_rejected_with_index(self):
        bad = np.ones((3, 3))
        bad[1, 2] = np.nan
        with pytest.raises(ValidationError, match=r"\(1, 2\)"):
            symmetrize(bad)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=4, max_size=4))
    def test_idempotent_exactly(self, entries):
        raw = np.array(entries).reshape(2, 2)
        once, _ = symmetrize(raw)
        twice, warned = symmetrize(once)
        np.testing.assert_array_equal(once, twice)
        assert not warned


class TestOffValue:
    def test_identity_is_zero(self):
        assert off_value(np.eye(3)) == 0.0

    def test_two_by_two(self):
        assert off_value([[1.0, 2.0], [2.0, 1.0]]) == 8.0
        assert off_value([[0.0, 3.0], [3.0, 0.0]]) == 18.0

    def test_nonnegative_near_diagonal(self):
        M = np.diag([3.0, -1.0, 7.0]) + 1e-200
        assert off_value(M) >= 0.0

    def test_energy_conservation_under_congruence(self, rng):
        # off + diagonal energy of U^T A U equals ||A||_F^2 for orthogonal U
        for k in range(10):
            d = int(rng.integers(2, 12))
            A = rand_sym(rng, d)
            U = random_orthogonal(d, rng)
            B = congruence(U, A)
            total = off_value(B) + float(np.sum(np.diagonal(B) ** 2))
            ref = float(np.sum(A * A))
            assert total == pytest.approx(ref, rel=1e-9)


class TestCongruence:
    def test_identity_basis(self, rng):
        A = rand_sym(rng, 5)
        np.testing.assert_allclose(congruence(np.eye(5), A), A, atol=1e-15)

    def test_45_degree_rotation_diagonalizes_exchange(self):
        # Hand-computed: R(45deg)^T [[0,1],[1,0]] R(45deg) = diag(1, -1)
        c = s = np.sqrt(0.5)
        U = np.array([[c, -s], [s, c]])
        out = congruence(U, [[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(out, np.diag([1.0, -1.0]), atol=1e-15)

    def test_frobenius_norm_preserved(self, rng):
        for _ in range(5):
            A = rand_sym(rng, 8)
            U = random_orthogonal(8, rng)
            assert np.linalg.norm(congruence(U, A)) == pytest.approx(
                np.linalg.norm(A), abs=1e-10
            )

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValidationError):
            congruence(np.eye(3), rand_sym(rng, 4))

    def test_congruence_diag_matches_full_product(self, rng):
        A = rand_sym(rng, 7)
        U = random_orthogonal(7, rng)
        np.testing.assert_allclose(
            congruence_diag(U, A), np.diagonal(U.T @ A @ U), atol=1e-12
        )


class TestRotationKernel:
    def test_matches_explicit_matrix_product(self, rng):
        d = 6
        A = rand_sym(rng, d)
        c, s = np.cos(0.3), np.sin(0.3)
        p, q = 1, 4
        J = np.eye(d)
        J[p, p] = J[q, q] = c
        J[p, q] = -s
        J[q, p] = s
        expected = J.T @ A @ J
        W = A.copy()
        rotate_congruence_inplace(W, p, q, c, s)
        np.testing.assert_allclose(W, expected, atol=1e-14)
        U = random_orthogonal(d, rng)
        expected_u = U @ J
        V = U.copy()
        rotate_columns_inplace(V, p, q, c, s)
        np.testing.assert_allclose(V, expected_u, atol=1e-14)


class TestJacobiEigen:
    def test_already_diagonal(self):
        vals, basis = jacobi_eigen(np.diag([5.0, 2.0, 1.0]))
        np.testing.assert_array_equal(vals, [5.0, 2.0, 1.0])
        # basis is the identity up to column permutation/sign
        np.testing.assert_allclose(np.abs(basis), np.eye(3), atol=1e-12)

    def test_two_by_two_characteristic_roots(self):
        # lambda^2 - 4 lambda + 3 = 0 -> 3, 1
        vals, _ = jacobi_eigen([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(vals, [3.0, 1.0], atol=1e-12)
        # lambda^2 - 1 = 0 -> 1, -1
        vals, _ = jacobi_eigen([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(vals, [1.0, -1.0], atol=1e-12)

    def test_matches_library_solver(self, rng):
        for _ in range(10):
            A = rand_sym(rng, 15)
            vals, _ = jacobi_eigen(A)
            expected = np.linalg.eigvalsh(A)[::-1]
            np.testing.assert_allclose(vals, expected, atol=1e-9 * np.linalg.norm(A))

    def test_spectral_shift(self, rng):
        A = rand_sym(rng, 9)
        c = 3.7
        vals, _ = jacobi_eigen(A)
        shifted, _ = jacobi_eigen(A + c * np.eye(9))
        np.testing.assert_allclose(shifted, vals + c, atol=1e-9)

    def test_eigenpair_residuals(self, rng):
        for _ in range(20):
            A = rand_sym(rng, 20)
            vals, basis = jacobi_eigen(A)
            norm = np.linalg.norm(A)
            for k in range(20):
                res = np.linalg.norm(A @ basis[:, k] - vals[k] * basis[:, k])
                assert res <= 1e-7 * norm

    def test_reconstruction(self, rng):
        A = rand_sym(rng, 12)
        vals, basis = jacobi_eigen(A)
        rebuilt = (basis * vals) @ basis.T
        assert np.linalg.norm(rebuilt - A) <= 1e-8 * np.linalg.norm(A)

    def test_nonconvergence_reports_off_ratio(self, rng):
        A = rand_sym(rng, 12)
        with pytest.raises(ConvergenceError) as exc:
            jacobi_eigen(A, tol=1e-30, max_sweeps=1)
        assert exc.value.off_ratio is not None and exc.value.off_ratio > 0.0


class TestCommutationResidual:
    def test_diagonal_matrices_commute(self):
        S = make_set([np.diag([1.0, 2.0]), np.diag([3.0, -1.0])])
        assert commutation_residual(S) == 0.0

    def test_exchange_and_sign_pair(self):
        # commutator of [[0,1],[1,0]] and [[1,0],[0,-1]] is [[0,-2],[2,0]],
        # norm sqrt(8); both factors have norm sqrt(2) -> residual sqrt(2)
        S = make_set([[[0.0, 1.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, -1.0]]])
        assert commutation_residual(S) == pytest.approx(np.sqrt(2.0), abs=1e-14)

    def test_self_commutation(self, rng):
        A = rand_sym(rng, 5)
        S = make_set([A, A])
        assert commutation_residual(S) == 0.0

    def test_single_matrix_rejected(self, rng):
        S = make_set([rand_sym(rng, 4)])
        with pytest.raises(ValidationError):
            commutation_residual(S)

    def test_zero_matrices_are_zero_over_zero(self):
        S = make_set([np.zeros((3, 3)), np.zeros((3, 3))])
        assert commutation_residual(S) == 0.0


class TestSymmetricMatrixSet:
    def test_rejects_asymmetric(self):
        M = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValidationError, match="matrix 0"):
            make_set([M])

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            make_set(np.zeros((0, 3, 3)))

    def test_immutable(self, rng):
        S = make_set([rand_sym(rng, 3)])
        with pytest.raises(ValueError):
            S.matrices[0, 0, 0] = 5.0

    def test_subset_preserves_order(self, rng):
        mats = [rand_sym(rng, 3) for _ in range(4)]
        S = make_set(mats)
        sub = S.subset([2, 0])
        np.testing.assert_array_equal(sub.matrices[0], mats[2])
        np.testing.assert_array_equal(sub.matrices[1], mats[0])
