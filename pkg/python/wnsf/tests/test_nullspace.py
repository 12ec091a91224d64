import unittest

import numpy as np
from numpy.testing import assert_allclose

from wnsf.core.canonical import block_hankel
from wnsf.core.linalg import vec_row
from wnsf.estimation.hoarx import MarkovEstimate
from wnsf.estimation.nullspace import (
    a_weighting,
    build_hankel,
    build_kn_a,
    ols_a,
    residual_coefficients,
    toeplitz_a,
    wls_a,
)
from wnsf.exceptions import InsufficientDataError
from systems import SIMO_A_K, SIMO_STRUCTURE, SISO_A, SISO_STRUCTURE, simo_model, siso_model


class TestResidualIdentity(unittest.TestCase):
    """c_r @ Hankel(dg) must equal Vec_row(dg) @ K_r for any dg."""

    def check(self, structure, n, seed):
        rng = np.random.default_rng(seed)
        p = n - structure.n_x
        a_rows = [rng.standard_normal(structure.n_x) for _ in range(structure.relation_count)]
        dg = rng.standard_normal((structure.n_y, n * structure.n_z))
        hankel = block_hankel(dg, structure.n_y, structure.n_z, structure.n_x + 1, p)
        for c, K in zip(residual_coefficients(structure, a_rows), build_kn_a(a_rows, n, p, structure)):
            assert_allclose(c @ hankel, vec_row(dg) @ K, atol=1e-12)

    def test_single_output(self):
        self.check(SISO_STRUCTURE, 8, seed=0)

    def test_multi_output(self):
        self.check(SIMO_STRUCTURE, 9, seed=1)

    def test_toeplitz(self):
        T = toeplitz_a([0.2, -0.8], 5, 3)
        assert_allclose(T[:, 0], [0.2, -0.8, 1.0, 0.0, 0.0])
        assert_allclose(T[0], [0.2, 0.0, 0.0])
        assert_allclose(T[2, 1], -0.8)


class TestNullSpaceFit(unittest.TestCase):
    def test_exact_siso(self):
        hankel = build_hankel(MarkovEstimate.from_model(siso_model(), 10), SISO_STRUCTURE)
        self.assertEqual(hankel.p, 8)
        self.assertEqual(hankel.full.shape, (3, 16))
        a_rows = ols_a(hankel)
        assert_allclose(a_rows[0], SISO_A, atol=1e-10)

    def test_exact_simo(self):
        markov = MarkovEstimate.from_model(simo_model(), 10)
        hankel = build_hankel(markov, SIMO_STRUCTURE)
        expected = SIMO_STRUCTURE.a_rows_from(SIMO_A_K)
        for estimate, truth in zip(ols_a(hankel), expected):
            assert_allclose(estimate, truth, atol=1e-10)
        for estimate, truth in zip(wls_a(hankel, markov, expected, iterations=2), expected):
            assert_allclose(estimate, truth, atol=1e-10)

    def test_weighted_exact_siso(self):
        markov = MarkovEstimate.from_model(siso_model(), 10)
        hankel = build_hankel(markov, SISO_STRUCTURE)
        a_init = [np.asarray(SISO_A) + 0.05]
        assert_allclose(wls_a(hankel, markov, a_init)[0], SISO_A, atol=1e-10)
        assert_allclose(wls_a(hankel, markov, a_init, weighting="identity")[0], SISO_A, atol=1e-10)

    def test_weighting_is_positive_definite(self):
        markov = MarkovEstimate.from_model(simo_model(), 10)
        for weight in a_weighting(SIMO_STRUCTURE, SIMO_STRUCTURE.a_rows_from(SIMO_A_K), markov, 7):
            self.assertGreater(np.linalg.eigvalsh(weight.lam)[0], 0.0)
            self.assertEqual(weight.source, "wls")

    def test_order_must_exceed_state_dimension(self):
        with self.assertRaises(InsufficientDataError):
            build_hankel(MarkovEstimate.from_model(siso_model(), 2), SISO_STRUCTURE)

    def test_iterations(self):
        markov = MarkovEstimate.from_model(siso_model(), 10)
        hankel = build_hankel(markov, SISO_STRUCTURE)
        with self.assertRaises(ValueError):
            wls_a(hankel, markov, [np.asarray(SISO_A)], iterations=0)
