import unittest
from fractions import Fraction

from src.connections import GenConnection, make_torsion_free, rank_two_shift
from src.courant import DissectionModel, ExactModel, QuadLieModel, lie_double
from src.dirac import (DiffOperator, canonical_dgo, canonical_independence, dgo_check, shift_check,
                       square_check, square_formula, standard_form, standard_form_check, supercommutator,
                       trace_by_contraction, trace_vector, trafo_check, torsion_commutator_check, torsion_value)
from src.linalg import FormField
from src.ring import TrigPoly
from src.utils.errors import PreconditionError

SO21 = {(0, 1): [0, 0, -1, 0], (1, 2): [1, 0, 0, 0], (0, 2): [0, -1, 0, 0]}
NEUTRAL_4 = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]]


def so21_line():
    return QuadLieModel(NEUTRAL_4, SO21, name="so21")


def twisted_t3():
    H = FormField(3, 3, 3, {(0, 1, 2): TrigPoly.cos_theta(3, 0)})
    return ExactModel(3, H, name="t3-h")


def curved_dissection():
    lie = QuadLieModel([[1, 0], [0, -1]], {}, name="abelian")
    zero = [[0, 0], [0, 0]]
    return DissectionModel(2, lie, nabla=[[[0, 1], [1, 0]], zero], R={(0, 1): [1, 0]}, name="t2-R")


class TestDiffOperator(unittest.TestCase):
    def test_derivative_commutes_past_functions(self):
        dim, m = 2, 1
        d = DiffOperator.derivative(dim, m, 0)
        f = DiffOperator.function(dim, m, TrigPoly.cos_theta(m, 0))
        commutator = supercommutator(d, f)
        self.assertEqual(commutator.order, 0)
        self.assertEqual(commutator.scalar_value(), -TrigPoly.sin_theta(m, 0))

    def test_operator_equality_is_on_coefficients(self):
        d = DiffOperator.derivative(2, 1, 0)
        self.assertEqual(d + d, d.scale(2))
        self.assertTrue((d - d).is_zero())
        self.assertIsNone(d.scalar_value())


class TestSquare(unittest.TestCase):
    def test_so21_square(self):
        verdict = square_check(so21_line())
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])
        self.assertEqual(verdict.data["expected"], TrigPoly.constant(0, Fraction(1, 16)))

    def test_aff_double_square_vanishes(self):
        model = lie_double(2, {(0, 1): [0, 1]}, name="aff-double")
        verdict = square_check(model)
        self.assertTrue(verdict.passed)
        self.assertTrue(verdict.data["expected"].is_zero())

    def test_torsion_commutator(self):
        for model in (so21_line(), twisted_t3()):
            T = GenConnection.flat(model).torsion()
            ok, witness = torsion_commutator_check(model, T)
            self.assertTrue(ok, witness)
            self.assertEqual(torsion_value(model, T, 0, 1), tuple(-x for x in torsion_value(model, T, 1, 0)))

    def test_exact_square(self):
        model = twisted_t3()
        verdict = square_check(model)
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])
        D = GenConnection.flat(model)
        self.assertEqual(verdict.data["expected"], square_formula(model, D.torsion()))


class TestGeneratingOperator(unittest.TestCase):
    def test_canonical_operator_is_generating(self):
        for model in (twisted_t3(), so21_line()):
            verdict = dgo_check(model, canonical_dgo(model))
            self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])
            self.assertIn("square", verdict.data)

    def test_canonical_operator_ignores_the_connection(self):
        model = twisted_t3()
        flat = GenConnection.flat(model)
        verdict = canonical_independence(model, flat, make_torsion_free(model, flat))
        self.assertTrue(verdict.passed)

    def test_shift_by_central_direction(self):
        model = so21_line()
        op = canonical_dgo(model)
        central = shift_check(model, op, model.frame(3))
        self.assertTrue(central.passed, [c.to_dict() for c in central.failures])
        self.assertTrue(central.data["member"])
        noncentral = shift_check(model, op, model.frame(0))
        self.assertTrue(noncentral.passed)
        self.assertFalse(noncentral.data["member"])


class TestChangeOfConnection(unittest.TestCase):
    def test_trafo_on_quadratic_lie(self):
        model = so21_line()
        A = rank_two_shift(model)
        self.assertEqual(trace_vector(model, A), trace_by_contraction(model, A))
        verdict = trafo_check(model, GenConnection.flat(model), A)
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])

    def test_trafo_on_exact_model(self):
        model = twisted_t3()
        D = make_torsion_free(model, GenConnection.flat(model))
        verdict = trafo_check(model, D, rank_two_shift(model))
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])

    def test_trafo_rejects_non_metric_shift(self):
        model = so21_line()
        A = {(0, 1, 1): TrigPoly.one(0)}
        with self.assertRaises(PreconditionError):
            trafo_check(model, GenConnection.flat(model), A)


class TestStandardForm(unittest.TestCase):
    def test_standard_form_on_dissection(self):
        model = curved_dissection()
        self.assertEqual(standard_form(model).parity, 1)
        verdict = standard_form_check(model)
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])

    def test_standard_form_needs_dissection(self):
        with self.assertRaises(PreconditionError):
            standard_form(so21_line())


if __name__ == '__main__':
    unittest.main()
