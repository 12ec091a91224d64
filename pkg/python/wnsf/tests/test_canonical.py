import unittest

import numpy as np
from numpy.testing import assert_allclose

from wnsf.core.canonical import (CanonicalStructure, ParameterVector, assemble_from_parameters, check_admissibility,
                                 enumerate_kronecker_indices, extract_parameters, generic_structure, to_canonical)
from wnsf.core.model import model_markov
from wnsf.estimation.hoarx import MarkovEstimate
from wnsf.exceptions import NotAdmissibleError
from systems import (SIMO_A_K, SIMO_STRUCTURE, SISO_STRUCTURE, SISO_THETA, duplicated_output_model, similar,
                     simo_model, siso_model)


class TestCanonicalStructure(unittest.TestCase):
    def test_simo_layout(self):
        s = SIMO_STRUCTURE
        self.assertEqual((s.n_x, s.n_y, s.n_z), (3, 2, 3))
        self.assertEqual(s.basis_row_indices, (0, 1, 3))
        self.assertEqual(s.free_row_indices, (0, 2))
        self.assertEqual(s.target_rows, (2, 5))
        self.assertEqual(s.minus_rows, (2, 3, 5))
        self.assertEqual(s.sign, 1.0)
        self.assertEqual(s.parameter_count, 6 + 9)

    def test_simo_matrices(self):
        s = SIMO_STRUCTURE
        assert_allclose(s.a_matrix([SIMO_A_K[0], SIMO_A_K[2]]), SIMO_A_K)
        assert_allclose(s.c_matrix(), [[1, 0, 0], [0, 1, 0]])

    def test_siso_observer_form(self):
        A_K = SISO_STRUCTURE.a_matrix([(0.2, -0.8)])
        assert_allclose(A_K, [[0.8, 1.0], [-0.2, 0.0]])
        assert_allclose(np.poly(A_K), [1.0, -0.8, 0.2])
        self.assertEqual(SISO_STRUCTURE.parameter_labels()[:3], ["a2", "a1", "B[1,1]"])

    def test_invalid_index(self):
        with self.assertRaises(ValueError):
            CanonicalStructure((2, 0))

    def test_enumeration(self):
        self.assertEqual([s.kronecker_index for s in enumerate_kronecker_indices(4, 2)],
                         [(1, 3), (2, 2), (3, 1)])
        self.assertEqual(len(enumerate_kronecker_indices(5, 3)), 6)
        with self.assertRaises(ValueError):
            enumerate_kronecker_indices(1, 2)

    def test_generic_structure(self):
        self.assertEqual(generic_structure(5, 2).kronecker_index, (3, 2))
        self.assertEqual(generic_structure(4, 1).kronecker_index, (4,))


class TestParameters(unittest.TestCase):
    def test_round_trip(self):
        model = siso_model()
        params = extract_parameters(model, SISO_STRUCTURE)
        assert_allclose(params.theta, SISO_THETA)
        rebuilt = assemble_from_parameters(ParameterVector.from_theta(params.theta, SISO_STRUCTURE))
        assert_allclose(rebuilt.A, model.A)

    def test_wrong_lengths(self):
        with self.assertRaises(ValueError):
            ParameterVector(((0.1,),), np.zeros(4), SISO_STRUCTURE)

    def test_unstable_assembly_warns(self):
        params = ParameterVector(((0.0, -1.5),), np.ones(4), SISO_STRUCTURE)
        with self.assertWarns(RuntimeWarning):
            model = assemble_from_parameters(params)
        self.assertFalse(model.predictor_stable)


class TestToCanonical(unittest.TestCase):
    def test_siso_from_any_basis(self):
        canonical = to_canonical(similar(siso_model(), seed=3), SISO_STRUCTURE)
        assert_allclose(extract_parameters(canonical, SISO_STRUCTURE).theta, SISO_THETA, atol=1e-9)

    def test_simo_from_any_basis(self):
        truth = simo_model()
        canonical = to_canonical(similar(truth, seed=4), SIMO_STRUCTURE)
        assert_allclose(canonical._A_K, SIMO_A_K, atol=1e-9)
        assert_allclose(model_markov(canonical, 10), model_markov(truth, 10), atol=1e-9)

    def test_dependent_basis_rows(self):
        with self.assertRaises(NotAdmissibleError):
            to_canonical(duplicated_output_model(), CanonicalStructure((1, 1)))


class TestAdmissibility(unittest.TestCase):
    def test_exact_markov_admissible(self):
        markov = MarkovEstimate.from_model(simo_model(), 10)
        verdict = check_admissibility(markov.g_hat, SIMO_STRUCTURE)
        self.assertTrue(verdict)
        self.assertIsNone(verdict.failed_test)
        self.assertLess(verdict.projection_residual, verdict.tolerance)

    def test_duplicated_output_fails_rank_test(self):
        markov = MarkovEstimate.from_model(duplicated_output_model(), 10)
        verdict = check_admissibility(markov.g_hat, CanonicalStructure((1, 1)))
        self.assertFalse(verdict)
        self.assertEqual(verdict.failed_test, "basis rank")
