import unittest

import numpy as np
from numpy.testing import assert_allclose

from wnsf.estimation.hoarx import MarkovEstimate
from wnsf.exceptions import StepError
from wnsf.steps import (AssembleStep, FitContext, HankelStep, HoarxStep, OlsAStep, OlsEtaStep, SelectStep,
                        WlsAStep, WlsEtaStep)
from wnsf.core.canonical import CanonicalStructure
from systems import SISO_STRUCTURE, SISO_THETA, duplicated_output_model, siso_model


def run_steps(context, *steps):
    for step in steps:
        context = step(context)
    return context


def exact_context(model=None, n=10) -> FitContext:
    model = model or siso_model()
    return FitContext(model.n_x, markov=MarkovEstimate.from_model(model, n))


class TestFitSteps(unittest.TestCase):
    def test_chain_recovers_exact_parameters(self):
        context = run_steps(exact_context(), HoarxStep(10), HankelStep(SISO_STRUCTURE), OlsAStep(), WlsAStep(),
                            OlsEtaStep(), WlsEtaStep(), AssembleStep())
        assert_allclose(context.theta, SISO_THETA, atol=1e-9)
        assert_allclose(context.theta_ols, SISO_THETA[:2], atol=1e-9)
        self.assertEqual(context.order, 10)
        self.assertLess(context.criterion, 1e-9)
        self.assertTrue(context.model.predictor_stable)

    def test_audit_log(self):
        step = HankelStep(SISO_STRUCTURE)
        step(exact_context())
        log = step.get_audit_log()
        self.assertEqual(log["status"], "success")
        self.assertFalse(log["flag"])
        self.assertIn("condition_number", log["log"])
        self.assertIsNotNone(log["execution_time"])
        self.assertEqual(step.to_json()["kronecker_index"], [2])

    def test_inadmissible_structure(self):
        step = HankelStep(CanonicalStructure((1, 1), n_u=1))
        with self.assertRaises(StepError) as raised:
            step(exact_context(duplicated_output_model(), n=6))
        self.assertEqual(raised.exception.step, "hankel")
        self.assertEqual(raised.exception.diagnostic, {"test": "basis rank"})
        self.assertEqual(step.get_audit_log()["status"], "error")
        self.assertTrue(step.get_flag())

    def test_missing_input(self):
        with self.assertRaises(StepError) as raised:
            OlsAStep()(FitContext(2))
        self.assertIn("hankel", str(raised.exception))

    def test_unstable_predictor_is_flagged(self):
        context = exact_context()
        context.structure = SISO_STRUCTURE
        context.a_wls = [np.array([0.0, -1.5])]
        context.eta_wls = SISO_THETA[2:]
        step = AssembleStep()
        context = step(context)
        self.assertTrue(step.get_flag())
        self.assertFalse(context.model.predictor_stable)

    def test_invalid_name(self):
        with self.assertRaises(ValueError):
            OlsAStep(name="a/b")


class TestSelectStep(unittest.TestCase):
    def candidate(self, order, criterion):
        return FitContext(2, order=order, criterion=criterion, scores={f"inner_{order}": criterion})

    def test_smaller_order_wins_near_tie(self):
        context = FitContext(2, candidates={
            "order_8": self.candidate(8, 1.0),
            "order_4": self.candidate(4, 1.0 + 1e-12),
            "order_6": self.candidate(6, 3.0),
        }, failures={"order_10": "failed"})
        winner = SelectStep("order")(context)
        self.assertEqual(winner.order, 4)
        self.assertEqual(winner.scores["order_6"], 3.0)
        self.assertEqual(winner.scores["inner_4"], 1.0 + 1e-12)
        self.assertEqual(winner.failures, {"order_10": "failed"})
        self.assertEqual(winner.candidates, {})

    def test_first_structure_wins_tie(self):
        context = FitContext(2, candidates={"nu_2_1": self.candidate(6, 0.5), "nu_1_2": self.candidate(6, 0.5)})
        step = SelectStep("structure")
        step(context)
        self.assertEqual(step.get_audit_log()["log"]["selected"], "nu_2_1")

    def test_no_candidates(self):
        with self.assertRaises(StepError):
            SelectStep("order")(FitContext(2, failures={"order_4": "singular"}))
