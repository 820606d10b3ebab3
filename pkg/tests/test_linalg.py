"""Tests for the in-repo one-sided Jacobi SVD and subspace geometry.

numpy.linalg is the independent oracle for singular values and spectral
norms; reconstruction and orthonormality are checked directly from the
definition.  The convention under test: M = U @ diag(S) @ V with V holding
right singular vectors as rows, S descending, and the largest-magnitude
entry of each U column nonnegative.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentsvd.linalg import (
    SvdConvergenceError,
    frobenius_distance,
    geodesic_distance,
    principal_angles,
    reconstruct,
    reverse_columns,
    reverse_rows,
    spectral_norm,
    svd,
)
from tests.conftest import orthonormality_residual, rand_matrix

dims = st.integers(min_value=2, max_value=12)


def check_contract(M, rtol=1e-10):
    """Assert the full SVD contract on one matrix and return the triple.

    U is m x m and V is n x n (full orthogonal factors); S has length
    min(m, n) and reconstruct embeds it in the rectangular diagonal.
    """
    t = svd(M)
    m, n = M.shape
    p = min(m, n)
    scale = max(float(np.linalg.norm(M)), 1e-30)
    assert t.U.shape == (m, m)
    assert t.S.shape == (p,)
    assert t.V.shape == (n, n)
    assert float(np.linalg.norm(reconstruct(t.U, t.S, t.V) - M)) <= rtol * scale
    assert orthonormality_residual(t.U) <= rtol
    assert orthonormality_residual(t.V.T) <= rtol
    assert np.all(np.diff(t.S) <= 0)
    assert np.all(t.S >= 0)
    return t


class TestWorkedExamples:
    def test_diagonal(self):
        t = svd(np.diag([5.0, 3.0]))
        np.testing.assert_allclose(t.S, [5.0, 3.0], atol=1e-14)
        np.testing.assert_allclose(t.U, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(t.V, np.eye(2), atol=1e-14)

    def test_antidiagonal(self):
        # Columns have norms 1 and 2; sorting must pick the second first.
        t = svd(np.array([[0.0, 2.0], [1.0, 0.0]]))
        np.testing.assert_allclose(t.S, [2.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(t.U, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(t.V, np.array([[0.0, 1.0], [1.0, 0.0]]), atol=1e-14)

    def test_rank_one(self):
        M = np.outer([1.0, 2.0], [2.0, 1.0])
        t = check_contract(M, rtol=1e-12)
        np.testing.assert_allclose(t.S, [5.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(t.U[:, 0], np.array([1.0, 2.0]) / np.sqrt(5), atol=1e-12)
        np.testing.assert_allclose(t.V[0], np.array([2.0, 1.0]) / np.sqrt(5), atol=1e-12)
        # The null-space column must still be orthonormal.
        assert orthonormality_residual(t.U) <= 1e-12

    def test_zero_matrix(self):
        t = svd(np.zeros((3, 3)))
        np.testing.assert_array_equal(t.S, np.zeros(3))
        assert orthonormality_residual(t.U) <= 1e-12
        assert orthonormality_residual(t.V.T) <= 1e-12

    def test_equal_singular_values_stable(self):
        # Equal column norms: no rotations fire and the stable sort keeps
        # input order, so the identity comes back exactly.
        t = svd(2.0 * np.eye(3))
        np.testing.assert_array_equal(t.U, np.eye(3))
        np.testing.assert_array_equal(t.V, np.eye(3))
        np.testing.assert_array_equal(t.S, [2.0, 2.0, 2.0])


class TestContract:
    @given(seed=st.integers(0, 10_000), m=dims, n=dims)
    @settings(max_examples=60, deadline=None)
    def test_random_matrices(self, seed, m, n):
        check_contract(rand_matrix(seed, m, n))

    @given(seed=st.integers(0, 10_000), n=dims)
    @settings(max_examples=30, deadline=None)
    def test_singular_values_match_oracle(self, seed, n):
        M = rand_matrix(seed, n)
        expected = np.linalg.svd(M, compute_uv=False)
        np.testing.assert_allclose(svd(M).S, expected, rtol=1e-9, atol=1e-10)

    def test_rectangular_wide_and_tall(self):
        for seed, (m, n) in enumerate([(3, 7), (7, 3), (2, 64), (64, 2)]):
            M = rand_matrix(100 + seed, m, n)
            t = check_contract(M)
            expected = np.linalg.svd(M, compute_uv=False)
            np.testing.assert_allclose(t.S, expected, rtol=1e-9, atol=1e-10)

    def test_rank_deficient_rectangular(self):
        # 6x3 matrix of rank 1: completion must supply orthonormal
        # basis vectors for the two null directions.
        M = np.outer(np.arange(1.0, 7.0), [1.0, -1.0, 2.0])
        check_contract(M, rtol=1e-11)

    def test_sign_convention(self):
        for seed in range(20):
            t = svd(rand_matrix(seed, 6, 4))
            for j in range(t.U.shape[1]):
                col = t.U[:, j]
                assert col[np.argmax(np.abs(col))] >= 0

    def test_deterministic(self):
        M = rand_matrix(55, 16)
        a, b = svd(M), svd(M)
        assert a.U.tobytes() == b.U.tobytes()
        assert a.S.tobytes() == b.S.tobytes()
        assert a.V.tobytes() == b.V.tobytes()

    def test_ill_conditioned(self):
        # Condition number ~1e12; absolute accuracy on the small values
        # is limited but the contract still holds at 1e-10 relative.
        rng = np.random.default_rng(3)
        Q1, _ = np.linalg.qr(rng.standard_normal((8, 8)))
        Q2, _ = np.linalg.qr(rng.standard_normal((8, 8)))
        M = Q1 @ np.diag(np.logspace(0, -12, 8)) @ Q2
        check_contract(M)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            svd(np.ones(3))
        with pytest.raises(ValueError):
            svd(np.ones((2, 2, 2)))
        with pytest.raises(ValueError):
            svd(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_convergence_error(self):
        with pytest.raises(SvdConvergenceError):
            svd(rand_matrix(0, 16), max_sweeps=1)
        with pytest.raises(SvdConvergenceError):
            svd(rand_matrix(0, 8), max_sweeps=0)


class TestReconstructAndReverse:
    def test_reconstruct_matches_dense_oracle(self):
        for seed, (m, n) in enumerate([(4, 4), (3, 5), (5, 3)]):
            M = rand_matrix(200 + seed, m, n)
            t = svd(M)
            D = np.zeros((m, n))
            np.fill_diagonal(D, t.S)
            oracle = t.U @ D @ t.V
            assert oracle.shape == (m, n)
            np.testing.assert_allclose(reconstruct(t.U, t.S, t.V), oracle, atol=1e-14)

    def test_reverse_matches_slicing(self):
        M = rand_matrix(9, 5, 7)
        np.testing.assert_array_equal(reverse_columns(M), M[:, ::-1])
        np.testing.assert_array_equal(reverse_rows(M), M[::-1, :])

    def test_reverse_involution(self):
        M = rand_matrix(10, 6)
        np.testing.assert_array_equal(reverse_columns(reverse_columns(M)), M)
        np.testing.assert_array_equal(reverse_rows(reverse_rows(M)), M)

    @given(seed=st.integers(0, 5000), n=dims)
    @settings(max_examples=40, deadline=None)
    def test_reversal_identity(self, seed, n):
        """Reversing U's columns, S, and V's rows together permutes the
        rank-one terms of the sum and leaves the product unchanged."""
        t = svd(rand_matrix(seed, n))
        direct = reconstruct(t.U, t.S, t.V)
        reversed_form = reconstruct(reverse_columns(t.U), t.S[::-1], reverse_rows(t.V))
        scale = max(float(np.linalg.norm(direct)), 1e-30)
        assert float(np.linalg.norm(direct - reversed_form)) <= 1e-12 * scale


class TestNormsAndDistances:
    def test_frobenius_distance_matches_fsum_oracle(self):
        import math

        A = rand_matrix(1, 9)
        B = rand_matrix(2, 9)
        oracle = math.sqrt(math.fsum((float(A[i, j] - B[i, j])) ** 2
                                     for i in range(9) for j in range(9)))
        assert abs(frobenius_distance(A, B) - oracle) <= 1e-12 * oracle

    def test_spectral_norm_matches_oracle(self):
        for seed in range(10):
            M = rand_matrix(300 + seed, 7, 5)
            expected = float(np.linalg.norm(M, 2))
            assert abs(spectral_norm(M) - expected) <= 1e-9 * expected

    def test_zero_cases(self):
        Z = np.zeros((4, 4))
        assert frobenius_distance(Z, Z) == 0.0
        assert spectral_norm(Z) == 0.0


class TestSubspaceGeometry:
    def test_identical_subspaces(self):
        A = rand_matrix(0, 10, 3)
        angles = principal_angles(A, A, 3)
        assert np.all(angles <= 1e-7)
        assert geodesic_distance(A, A, 3) <= 1e-6

    def test_basis_invariance(self):
        # The distance depends only on the span, not the basis chosen.
        A = rand_matrix(1, 12, 4)
        R = np.linalg.qr(rand_matrix(2, 4, 4))[0]
        assert geodesic_distance(A, A @ R, 4) <= 1e-6

    def test_orthogonal_subspaces(self):
        E = np.eye(10)
        p = 3
        d = geodesic_distance(E[:, :p], E[:, p:2 * p], p)
        assert abs(d - np.sqrt(p) * np.pi / 2) <= 1e-6

    def test_known_angle(self):
        # Two lines in the plane at 45 degrees.
        A = np.array([[1.0], [0.0]])
        B = np.array([[1.0], [1.0]])
        angles = principal_angles(A, B, 1)
        assert abs(angles[0] - np.pi / 4) <= 1e-12
        assert abs(geodesic_distance(A, B, 1) - np.pi / 4) <= 1e-12

    @given(seed=st.integers(0, 2000))
    @settings(max_examples=30, deadline=None)
    def test_symmetry(self, seed):
        A = rand_matrix(seed, 9, 3)
        B = rand_matrix(seed + 7000, 9, 3)
        d1 = geodesic_distance(A, B, 3)
        d2 = geodesic_distance(B, A, 3)
        assert abs(d1 - d2) <= 1e-12
        assert 0.0 <= d1 <= np.sqrt(3) * np.pi / 2 + 1e-12

    def test_angles_ascending(self):
        A = rand_matrix(4, 10, 4)
        B = rand_matrix(5, 10, 4)
        angles = principal_angles(A, B, 4)
        assert np.all(np.diff(angles) >= 0)

    def test_rank_deficient_rejected(self):
        A = np.ones((6, 2))  # duplicate columns: spans a line, not a plane
        with pytest.raises(ValueError):
            principal_angles(A, rand_matrix(1, 6, 2), 2)

    def test_p_validation(self):
        A = rand_matrix(1, 6, 2)
        with pytest.raises(ValueError):
            principal_angles(A, A, 3)
        with pytest.raises(ValueError):
            principal_angles(A, A, 0)
