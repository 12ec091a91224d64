import unittest

import numpy as np
from pandas.testing import assert_frame_equal

from wnsf.config import ExperimentConfig, FitConfig, RationalFeedback
from wnsf.executor import WNSFExecutor, monte_carlo
from wnsf.simulate import simulate, spawn_rngs
from systems import (SISO_A, SISO_CONTROLLER_DEN, SISO_CONTROLLER_NUM, SISO_REFERENCE_GAIN, SISO_STRUCTURE, SLOW,
                     simo_model, siso_model)


class TestMonteCarlo(unittest.TestCase):
    def setUp(self):
        self.experiment = ExperimentConfig(sample_count=500, seed=3)

    def test_table(self):
        table = monte_carlo(siso_model(), self.experiment, trials=4, grid_N=[400, 800], orders=10)
        self.assertEqual(list(table.columns), ["N", "parameter", "stage", "trials", "mse", "crlb", "ratio"])
        self.assertEqual(len(table), 16)
        self.assertEqual(sorted(table["stage"].unique()), ["final", "ols"])
        self.assertTrue((table["trials"] == 4).all())
        final = table[(table["stage"] == "final") & (table["N"] == 400)]
        self.assertEqual(list(final["parameter"]), ["a2", "a1", "B[1,1]", "K[1,1]", "B[2,1]", "K[2,1]"])
        self.assertTrue(np.all(table["crlb"] > 0))

    def test_independent_of_thread_count(self):
        first = monte_carlo(siso_model(), self.experiment, trials=3, grid_N=[400], orders=10, max_workers=1)
        second = monte_carlo(siso_model(), self.experiment, trials=3, grid_N=[400], orders=10, max_workers=3)
        assert_frame_equal(first, second)

    def test_armax_coordinates(self):
        table = monte_carlo(siso_model(), self.experiment, trials=3, grid_N=[400], orders=[10], coordinates="armax")
        self.assertEqual(list(table[table["stage"] == "final"]["parameter"]), ["f1", "f2", "b1", "b2", "a1", "a2"])
        self.assertEqual(list(table[table["stage"] == "ols"]["parameter"]), ["a1", "a2"])

    def test_bad_arguments(self):
        with self.assertRaises(ValueError):
            monte_carlo(siso_model(), self.experiment, trials=1, grid_N=[400])
        with self.assertRaises(ValueError):
            monte_carlo(siso_model(), self.experiment, trials=3, grid_N=[400, 800], orders=[10])
        with self.assertRaises(ValueError):
            monte_carlo(simo_model(), self.experiment, trials=3, grid_N=[400], coordinates="armax")


@unittest.skipUnless(SLOW, "set WNSF_SLOW_TESTS=1 to run the efficiency study")
class TestEfficiency(unittest.TestCase):
    def assert_window(self, table, N, low, high):
        final = table[(table["stage"] == "final") & (table["N"] == N)]
        for label, ratio in zip(final["parameter"], final["ratio"]):
            self.assertTrue(low <= ratio <= high, f"{label}: MSE/CRLB = {ratio:.3f} at N = {N}")

    def test_open_loop_reaches_the_bound(self):
        experiment = ExperimentConfig(sample_count=10000, seed=2024)
        table = monte_carlo(siso_model(), experiment, trials=200, grid_N=[1000, 10000], orders=[50, 80])
        self.assert_window(table, 10000, 0.8, 1.3)
        final = table[table["stage"] == "final"].pivot(index="parameter", columns="N", values="ratio")
        self.assertTrue((final[10000] <= 1.2 * final[1000]).all(), final)

    def test_closed_loop_reaches_the_bound(self):
        experiment = ExperimentConfig(
            sample_count=10000, seed=2025,
            loop=RationalFeedback(num=SISO_CONTROLLER_NUM, den=SISO_CONTROLLER_DEN,
                                  reference_gain=SISO_REFERENCE_GAIN))
        table = monte_carlo(siso_model(), experiment, trials=200, grid_N=[10000], orders=80)
        self.assert_window(table, 10000, 0.8, 1.3)

    def test_multi_output_reaches_the_bound(self):
        experiment = ExperimentConfig(sample_count=100000, seed=2026)
        table = monte_carlo(simo_model(), experiment, trials=100, grid_N=[10000, 100000], orders=[40, 60])
        self.assert_window(table, 100000, 0.7, 1.5)

    def test_weighted_a_dominates_ordinary(self):
        experiment = ExperimentConfig(sample_count=6000, seed=2027)
        table = monte_carlo(siso_model(), experiment, trials=200, grid_N=[6000], orders=60)
        ols = table[table["stage"] == "ols"]["mse"].to_numpy()
        wls = table[table["stage"] == "final"]["mse"].to_numpy()[:SISO_STRUCTURE.a_count]
        self.assertTrue(np.all(wls <= 1.05 * ols), (wls, ols))
        self.assertTrue(np.any(wls <= 0.95 * ols), (wls, ols))
        self.assertLessEqual(wls.sum(), ols.sum())

    def test_median_error_shrinks_with_N(self):
        medians = {}
        for N, order in ((600, 20), (6000, 60)):
            errors = []
            for rng in spawn_rngs(2028 + N, 100):
                executor = WNSFExecutor(FitConfig(n_x=2, order=order, structure=[2]), max_workers=1)
                executor.fit(simulate(siso_model(), ExperimentConfig(sample_count=N), rng))
                errors.append(np.linalg.norm(executor.context.a_wls[0] - np.asarray(SISO_A)))
            medians[N] = np.median(errors)
        self.assertLess(medians[6000], medians[600])
