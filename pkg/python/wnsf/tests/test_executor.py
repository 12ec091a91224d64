import contextlib
import io
import json
import os
import tempfile
import unittest

import numpy as np
import yaml
from numpy.testing import assert_allclose

from wnsf.config import ExperimentConfig, FitConfig, MultisineExcitation, StaticFeedback
from wnsf.core.canonical import extract_parameters
from wnsf.core.model import model_markov
from wnsf.estimation.hoarx import MarkovEstimate
from wnsf.exceptions import SerializationError, StepError
from wnsf.executor import WNSFExecutor
from wnsf.metrics import fit_impulse
from wnsf.simulate import simulate
from wnsf.utils.serializer import SerializerUtils
from systems import SISO_STRUCTURE, SISO_THETA, SLOW, duplicated_output_model, mimo_model, simo_model, siso_model


class TestFitMarkov(unittest.TestCase):
    def test_siso(self):
        executor = WNSFExecutor(FitConfig(n_x=2))
        model = executor.fit_markov(MarkovEstimate.from_model(siso_model(), 10))
        assert_allclose(extract_parameters(model, SISO_STRUCTURE).theta, SISO_THETA, atol=1e-9)
        report = executor.report()
        self.assertEqual(report.selection_criterion, "markov_misfit")
        self.assertEqual(report.kronecker_index, [2])
        self.assertEqual(report.order, 10)
        self.assertEqual(list(report.parameters), SISO_STRUCTURE.parameter_labels())

    def test_simo_over_every_structure(self):
        markov = MarkovEstimate.from_model(simo_model(), 10)
        executor = WNSFExecutor(FitConfig(n_x=3))
        model = executor.fit_markov(markov)
        assert_allclose(model_markov(model, 10), markov.g_hat, atol=1e-8)
        self.assertIn(executor.report().kronecker_index, ([1, 2], [2, 1]))
        self.assertIn("nu_1_2", executor.report().candidates)

    def test_inadmissible_structure(self):
        executor = WNSFExecutor(FitConfig(n_x=2, structure=[1, 1]))
        with self.assertRaises(StepError) as raised:
            executor.fit_markov(MarkovEstimate.from_model(duplicated_output_model(), 6))
        self.assertEqual(raised.exception.step, "hankel")
        self.assertEqual(raised.exception.diagnostic, {"test": "basis rank"})
        self.assertEqual(len(executor.get_logs()), 1)
        with self.assertRaises(ValueError):
            executor.report()


class TestFitData(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.dataset = simulate(siso_model(), ExperimentConfig(sample_count=20000, seed=11))

    def test_noisy_siso(self):
        executor = WNSFExecutor(FitConfig(n_x=2, order=20))
        model = executor.fit(self.dataset)
        assert_allclose(extract_parameters(model, SISO_STRUCTURE).theta, SISO_THETA, atol=0.15)
        report = executor.report()
        self.assertEqual(report.selection_criterion, "prediction_error")
        self.assertAlmostEqual(report.sigma_e2_hat, 1.0, delta=0.05)
        self.assertAlmostEqual(report.criterion_value, 1.0, delta=0.05)

    def test_order_grid(self):
        executor = WNSFExecutor(FitConfig(n_x=2, order_grid=[20, 6, 10]))
        executor.fit(self.dataset)
        report = executor.report()
        self.assertIn(report.order, (6, 10, 20))
        for name in ("order_6", "order_10", "order_20"):
            self.assertIn(name, report.candidates)
        self.assertEqual(report.candidates[f"order_{report.order}"], report.criterion_value)

    def test_save_and_print(self):
        executor = WNSFExecutor(FitConfig(n_x=2, order=10))
        with self.assertRaises(SerializationError):
            executor.save(tempfile.gettempdir())
        executor.fit(self.dataset)
        with tempfile.TemporaryDirectory() as directory:
            executor.save(directory)
            model, structure = SerializerUtils.load_model(os.path.join(directory, "model.json"))
            assert_allclose(model.A, executor.context.model.A)
            self.assertEqual(structure.kronecker_index, (2,))
            with open(os.path.join(directory, "report.json")) as handle:
                report = json.load(handle)
            with open(os.path.join(directory, "report.yaml")) as handle:
                self.assertEqual(yaml.safe_load(handle)["order"], report["order"])
            self.assertEqual(report["order"], 10)

        output = io.StringIO()
        with contextlib.redirect_stdout(output):
            executor.print_logs()
        self.assertIn("PIPE 1: wnsf", output.getvalue())
        self.assertIn("STEP 1: hoarx", output.getvalue())
        self.assertTrue(np.isfinite(executor.report().criterion_value))


class TestMimo(unittest.TestCase):
    def test_exact_markov_parameters(self):
        markov = MarkovEstimate.from_model(mimo_model(), 16)
        model = WNSFExecutor(FitConfig(n_x=4, structure=[1, 3])).fit_markov(markov)
        assert_allclose(model_markov(model, 16), markov.g_hat, atol=1e-7)

    @unittest.skipUnless(SLOW, "set WNSF_SLOW_TESTS=1 to run the closed-loop benchmark")
    def test_closed_loop_with_poor_excitation(self):
        experiment = ExperimentConfig(
            sample_count=4000, seed=5, innovation_variance=1e-4,
            loop=StaticFeedback(gain=[[-0.1, 0.0], [0.0, -0.1]]),
            excitation=MultisineExcitation(frequencies=[[0.4 * np.pi, 0.55 * np.pi], [0.45 * np.pi, 0.6 * np.pi]],
                                           amplitudes=[[1.0, 1.0], [1.0, 1.0]], dither_variance=8e-8))
        dataset = simulate(mimo_model(), experiment)
        model = WNSFExecutor(FitConfig(n_x=4, order=50, structure=[1, 3])).fit(dataset)
        self.assertGreater(fit_impulse(mimo_model(), model, 100), 80.0)
