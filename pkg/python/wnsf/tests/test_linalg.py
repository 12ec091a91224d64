import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from wnsf.core.linalg import (check_full_row_rank, cholesky_factor, matrix_powers, observability_blocks,
                              stacked_to_row_permutation, truncated_whitener, vec_row, weighted_lstsq)
from wnsf.exceptions import SingularMatrixError


class TestLinalg(unittest.TestCase):
    def test_vec_row_stacks_rows(self):
        assert_array_equal(vec_row([[1, 2], [3, 4]]), [1, 2, 3, 4])

    def test_matrix_powers_and_observability(self):
        A = np.array([[0.5, 1.0], [0.0, 0.2]])
        C = np.array([[1.0, 0.0]])
        powers = matrix_powers(A, 3)
        assert_allclose(powers[2], A @ A)
        blocks = observability_blocks(A, C, 3)
        assert_allclose(blocks[2], C @ A @ A)

    def test_permutation_reorders_blocks(self):
        n, n_y, n_z = 3, 2, 2
        g = np.arange(n_y * n * n_z, dtype=float).reshape(n_y, n * n_z)
        stacked = np.vstack([g[:, k * n_z:(k + 1) * n_z] for k in range(n)])
        assert_array_equal(vec_row(stacked) @ stacked_to_row_permutation(n, n_y, n_z), vec_row(g))

    def test_weighted_lstsq_recovers_exact_solution(self):
        rng = np.random.default_rng(1)
        regressor = rng.standard_normal((3, 20))
        theta = np.array([0.5, -1.0, 2.0])
        weight = rng.standard_normal((20, 20))
        factor = np.linalg.cholesky(weight @ weight.T + 20 * np.eye(20))
        assert_allclose(weighted_lstsq(regressor, theta @ regressor), theta, atol=1e-12)
        assert_allclose(weighted_lstsq(regressor, theta @ regressor, factor), theta, atol=1e-10)

    def test_row_rank_check(self):
        self.assertAlmostEqual(check_full_row_rank(np.eye(2), "I"), 1.0)
        with self.assertRaises(SingularMatrixError) as ctx:
            check_full_row_rank(np.array([[1.0, 2.0], [2.0, 4.0]]), "X")
        self.assertIn("X", str(ctx.exception))

    def test_cholesky_regularizes_semidefinite(self):
        S = np.array([[1.0, 1.0], [1.0, 1.0]])
        with self.assertWarns(RuntimeWarning):
            L = cholesky_factor(S, "S")
        assert_allclose(L @ L.T, S, atol=1e-10)
        with self.assertRaises(SingularMatrixError):
            cholesky_factor(-np.eye(2), "S", regularize=False)

    def test_truncated_whitener_drops_small_directions(self):
        F = truncated_whitener(np.diag([4.0, 1.0, 1e-14]))
        self.assertEqual(F.shape, (2, 3))
        assert_allclose(F.T @ F, np.diag([0.25, 1.0, 0.0]), atol=1e-12)

    def test_truncated_whitener_forced_drop(self):
        F = truncated_whitener(np.diag([4.0, 1.0, 0.5]), drop=1)
        assert_allclose(F.T @ F, np.diag([0.25, 1.0, 0.0]), atol=1e-12)
        with self.assertRaises(SingularMatrixError):
            truncated_whitener(np.zeros((2, 2)))
        with self.assertRaises(SingularMatrixError):
            truncated_whitener(np.eye(2), drop=2)

    def test_whitener_weighted_lstsq(self):
        rng = np.random.default_rng(2)
        regressor = rng.standard_normal((2, 12))
        theta = np.array([1.5, -0.5])
        S = rng.standard_normal((12, 12))
        F = truncated_whitener(S @ S.T + np.eye(12))
        assert_allclose(weighted_lstsq(regressor, theta @ regressor, whitener=F), theta, atol=1e-10)
