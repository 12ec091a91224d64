import unittest
import warnings

import numpy as np
from numpy.testing import assert_allclose

from wnsf.config import ExperimentConfig
from wnsf.core.linalg import vec_row
from wnsf.estimation.bkfit import build_phi, composite_transform, extended_observability, ols_eta, wls_eta
from wnsf.estimation.hoarx import MarkovEstimate, estimate_hoarx
from wnsf.estimation.nullspace import a_weighting, build_hankel, kron_gram_weight, ols_a, wls_a
from wnsf.simulate import simulate
from systems import SIMO_A_K, SIMO_STRUCTURE, SISO_A, SISO_STRUCTURE, SISO_THETA, simo_model, siso_model


def observability(structure, a_rows, n):
    return extended_observability(structure.a_matrix(a_rows), structure.c_matrix(), n)


class TestObservability(unittest.TestCase):
    def test_blocks(self):
        O = observability(SISO_STRUCTURE, [SISO_A], 4)
        A_K = SISO_STRUCTURE.a_matrix([SISO_A])
        self.assertEqual(O.order, 4)
        self.assertEqual(O.n_x, 2)
        assert_allclose(O.block(2), SISO_STRUCTURE.c_matrix() @ A_K @ A_K)

    def test_phi_reproduces_markov(self):
        n = 6
        O = observability(SISO_STRUCTURE, [SISO_A], n)
        markov = MarkovEstimate.from_model(siso_model(), n)
        assert_allclose(SISO_THETA[2:] @ build_phi(O, 2), vec_row(markov.g_hat), atol=1e-12)


class TestEtaFit(unittest.TestCase):
    def test_exact_siso(self):
        markov = MarkovEstimate.from_model(siso_model(), 10)
        hankel = build_hankel(markov, SISO_STRUCTURE)
        eta = ols_eta(markov, observability(SISO_STRUCTURE, [SISO_A], 10))
        assert_allclose(eta, SISO_THETA[2:], atol=1e-10)
        assert_allclose(wls_eta(markov, hankel, [np.asarray(SISO_A)], eta), SISO_THETA[2:], atol=1e-10)

    def test_exact_simo(self):
        markov = MarkovEstimate.from_model(simo_model(), 10)
        hankel = build_hankel(markov, SIMO_STRUCTURE)
        a_rows = SIMO_STRUCTURE.a_rows_from(SIMO_A_K)
        model = simo_model()
        expected = np.column_stack([model.B, model.K]).reshape(-1)
        eta = ols_eta(markov, observability(SIMO_STRUCTURE, a_rows, 10))
        assert_allclose(eta, expected, atol=1e-10)
        assert_allclose(wls_eta(markov, hankel, a_rows, eta, iterations=2), expected, atol=1e-10)


class TestCompositeTransform(unittest.TestCase):
    """First-order propagation of a Markov perturbation through the A_K fit."""

    def check(self, model, structure, n, seed):
        truth = MarkovEstimate.from_model(model, n)
        hankel = build_hankel(truth, structure)
        a_true = structure.a_rows_from(model._A_K)
        eta = np.column_stack([model.B, model.K]).reshape(-1)
        weights = a_weighting(structure, a_true, truth, hankel.p)

        delta = 1e-6 * np.random.default_rng(seed).standard_normal(truth.g_hat.shape)
        perturbed = MarkovEstimate(truth.g_hat + delta, truth.gram, 1, 1.0, n, model.n_u)
        a_hat = wls_a(build_hankel(perturbed, structure), perturbed, a_true, iterations=1)
        phi = build_phi(observability(structure, a_hat, n), structure.n_z)

        residual = vec_row(perturbed.g_hat) - eta @ phi
        linear = vec_row(delta) @ composite_transform(truth, hankel, a_true, eta, weights)
        self.assertLessEqual(np.linalg.norm(residual - linear), 1e-4 * np.linalg.norm(delta))

    def test_single_output(self):
        self.check(siso_model(), SISO_STRUCTURE, 8, seed=0)

    def test_multi_output(self):
        self.check(simo_model(), SIMO_STRUCTURE, 8, seed=1)

    def test_shape(self):
        markov = MarkovEstimate.from_model(siso_model(), 8)
        hankel = build_hankel(markov, SISO_STRUCTURE)
        transform = composite_transform(markov, hankel, [np.asarray(SISO_A)], SISO_THETA[2:])
        self.assertEqual(transform.shape, (16, 16))


class TestEtaWeighting(unittest.TestCase):
    """Lambda_n(a, eta) loses one rank per free A_K parameter."""

    def test_weighting_null_space(self):
        markov = MarkovEstimate.from_model(siso_model(), 10)
        hankel = build_hankel(markov, SISO_STRUCTURE)
        transform = composite_transform(markov, hankel, [np.asarray(SISO_A)], SISO_THETA[2:])
        eigenvalues = np.linalg.eigvalsh(kron_gram_weight(transform, markov))
        relative = eigenvalues / eigenvalues[-1]
        self.assertLess(relative[SISO_STRUCTURE.a_count - 1], 1e-8)

    def test_noisy_siso_is_stable_across_orders(self):
        dataset = simulate(siso_model(), ExperimentConfig(sample_count=20000, seed=11))
        for n in (10, 20, 40):
            markov = estimate_hoarx(dataset, n)
            hankel = build_hankel(markov, SISO_STRUCTURE)
            a_wls = wls_a(hankel, markov, ols_a(hankel), iterations=1)
            eta_ols = ols_eta(markov, observability(SISO_STRUCTURE, a_wls, n))
            with warnings.catch_warnings():
                warnings.simplefilter("error")
                eta = wls_eta(markov, hankel, a_wls, eta_ols)
            assert_allclose(eta, SISO_THETA[2:], atol=0.05, err_msg=f"n = {n}")
