import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from wnsf.config import (
    ExperimentConfig,
    FilteredWhiteExcitation,
    ImpulseExcitation,
    MultisineExcitation,
    RandomSystemConstraints,
    StaticFeedback,
)
from wnsf.core.canonical import check_admissibility, generic_structure
from wnsf.core.linalg import spectral_radius
from wnsf.core.model import h2_norm, impulse_response, model_markov
from wnsf.exceptions import ConvergenceError, UnstableSystemError
from wnsf.simulate import excitation_variance, generate_excitation, make_rng, random_system, simulate, spawn_rngs
from wnsf.simulate.random_system import _is_minimal
from systems import siso_model


class TestExcitation(unittest.TestCase):
    def test_multisine(self):
        excitation = MultisineExcitation(frequencies=[[0.5]], amplitudes=[[2.0]])
        r = generate_excitation(excitation, 1, 100, make_rng(0))
        assert_allclose(r[:, 0], 2.0 * np.sin(0.5 * np.arange(100)))
        assert_allclose(excitation_variance(excitation, 1), [2.0])

    def test_channel_mismatch(self):
        with self.assertRaises(ValueError):
            generate_excitation(MultisineExcitation(frequencies=[[0.5]], amplitudes=[[1.0]]), 2, 10, make_rng(0))
        with self.assertRaises(ValueError):
            generate_excitation(ImpulseExcitation(channel=3), 1, 10, make_rng(0))

    def test_filtered_variance(self):
        excitation = FilteredWhiteExcitation(num=[1.0], den=[1.0, -0.5], variance=3.0)
        assert_allclose(excitation_variance(excitation, 2), [4.0, 4.0])

    def test_no_inputs(self):
        self.assertEqual(generate_excitation(ImpulseExcitation(), 0, 10, make_rng(0)).shape, (10, 0))


class TestSimulate(unittest.TestCase):
    def test_deterministic(self):
        config = ExperimentConfig(sample_count=200, seed=42)
        first, second = simulate(siso_model(), config), simulate(siso_model(), config)
        assert_array_equal(first.y, second.y)
        assert_array_equal(first.u, second.u)
        other = simulate(siso_model(), config.model_copy(update={"seed": 43}))
        self.assertFalse(np.allclose(first.y, other.y))

    def test_independent_streams(self):
        a, b = spawn_rngs(7, 2)
        self.assertFalse(np.allclose(a.standard_normal(5), b.standard_normal(5)))
        assert_array_equal(spawn_rngs(7, 2)[1].standard_normal(5), spawn_rngs(7, 2)[1].standard_normal(5))

    def test_noise_free_impulse(self):
        config = ExperimentConfig(sample_count=30, excitation=ImpulseExcitation(), innovation_variance=0.0)
        dataset = simulate(siso_model(), config)
        self.assertEqual(dataset.y[0, 0], 0.0)
        assert_allclose(dataset.y[1:, 0], impulse_response(siso_model(), 29)[:, 0, 0], atol=1e-12)
        self.assertEqual(dataset.loop, "open")

    def test_burn_in(self):
        config = ExperimentConfig(sample_count=50, burn_in=20, seed=3)
        dataset = simulate(siso_model(), config)
        full = simulate(siso_model(), config.model_copy(update={"sample_count": 70, "burn_in": 0}))
        self.assertEqual(dataset.sample_count, 50)
        assert_allclose(dataset.y, full.y[20:])

    def test_static_feedback(self):
        config = ExperimentConfig(sample_count=100, loop=StaticFeedback(gain=[[0.1]], reference_gain=0.0))
        dataset = simulate(siso_model(), config)
        assert_allclose(dataset.u, -0.1 * dataset.y, atol=1e-12)
        self.assertEqual(dataset.loop, "closed")
        self.assertEqual(dataset.controller["kind"], "static")

    def test_unstable_loop(self):
        config = ExperimentConfig(sample_count=100, loop=StaticFeedback(gain=[[-2.0]]))
        with self.assertRaises(UnstableSystemError):
            simulate(siso_model(), config)


class TestRandomSystem(unittest.TestCase):
    def test_minimality(self):
        A = np.diag([0.5, 0.3])
        C = np.array([[1.0, 1.0]])
        self.assertTrue(_is_minimal(A, np.array([[1.0], [1.0]]), C))
        self.assertFalse(_is_minimal(A, np.array([[1.0], [0.0]]), C))
        self.assertFalse(_is_minimal(A, np.array([[1.0], [1.0]]), np.array([[1.0, 0.0]])))

    def test_constraints(self):
        constraints = RandomSystemConstraints()
        for seed in range(3):
            model = random_system(3, 1, 2, seed, constraints)
            self.assertLessEqual(spectral_radius(model.A), constraints.pole_cap + 1e-12)
            self.assertGreaterEqual(spectral_radius(model.A), constraints.min_pole - 1e-12)
            self.assertLessEqual(spectral_radius(model._A_K), constraints.predictor_cap + 1e-12)
            self.assertTrue(constraints.h2_min <= h2_norm(model) <= constraints.h2_max)

    def test_reproducible(self):
        assert_array_equal(random_system(2, 1, 1, 5).A, random_system(2, 1, 1, 5).A)

    def test_canonical(self):
        model = random_system(3, 1, 2, 0, RandomSystemConstraints(canonical=True))
        structure = generic_structure(3, 2, 1)
        assert_allclose(model.C, structure.c_matrix(), atol=1e-10)
        self.assertTrue(check_admissibility(model_markov(model, 10), structure))

    def test_rejections_exhausted(self):
        constraints = RandomSystemConstraints(predictor_cap=0.01, max_rejections=5)
        with self.assertRaises(ConvergenceError) as raised:
            random_system(4, 1, 2, 0, constraints)
        self.assertEqual(raised.exception.iterations, 5)

    def test_bad_dimensions(self):
        with self.assertRaises(ValueError):
            random_system(0, 1, 1)
