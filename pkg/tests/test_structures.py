import unittest

from src.courant import ExactModel, QuadLieModel
from src.linalg import EndoField, FormField, constant_endo
from src.ring import ComplexPoly, TrigPoly
from src.structures import (GenComplex, HermitianPair, HyperTriple, b_transform_structure,
                            complex_lift, gk_bracket_check, is_generalized_kahler, is_integrable,
                            metric_from_g, mixed_bracket_identity, nijenhuis, nijenhuis_identities,
                            one_zero_bundle, symplectic_lift)
from src.utils.errors import PreconditionError

G4 = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]]
J0 = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
L_I = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
L_J = [[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]]


def flat_pair(model):
    return HermitianPair(metric_from_g(model, G4), complex_lift(model, J0))


def wobbled_j(m=4):
    s = TrigPoly.sin_theta(m, 0)
    rows = [[TrigPoly.constant(m, c) for c in row] for row in J0]
    rows[0][2] = rows[0][2] + s
    rows[1][3] = rows[1][3] - s
    return rows


class TestGeneralizedMetric(unittest.TestCase):
    def test_metric_from_riemannian_g(self):
        model = ExactModel(2)
        metric = metric_from_g(model, [[1, 0], [0, 1]])
        verdict = metric.validate(model.space)
        self.assertTrue(verdict.passed)
        self.assertEqual(verdict.data["signature_plus"], [2, 0])
        self.assertEqual(verdict.data["signature_minus"], [0, 2])
        self.assertEqual(len(metric.eigenbasis(1)), 2)

    def test_projectors_sum_to_identity(self):
        model = ExactModel(2)
        metric = metric_from_g(model, [[2, 1], [1, 1]])
        total = metric.projector(1) + metric.projector(-1)
        self.assertEqual(total, EndoField.identity(2, 4))

    def test_non_involution_fails(self):
        model = ExactModel(1)
        verdict = HermitianPair(metric_from_g(model, [[1]]),
                                GenComplex(constant_endo(1, [[1, 0], [0, 1]]))).validate(model.space)
        self.assertFalse(verdict.check("J: square is -Id").passed)


class TestComplexStructures(unittest.TestCase):
    def test_flat_hermitian_pair_is_generalized_kahler(self):
        model = ExactModel(4, name="t4")
        pair = flat_pair(model)
        self.assertTrue(pair.validate(model.space).passed)
        self.assertTrue(is_integrable(model, pair.complex))
        verdict = gk_bracket_check(model, pair)
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])
        self.assertTrue(mixed_bracket_identity(model, pair).passed)

    def test_symplectic_lift_is_integrable(self):
        model = ExactModel(2)
        J = symplectic_lift(model, [[0, 1], [-1, 0]])
        self.assertTrue(J.validate(model.space).passed)
        self.assertTrue(nijenhuis(model, J).is_zero())

    def test_wobbled_structure_is_not_integrable(self):
        model = ExactModel(4)
        J = complex_lift(model, wobbled_j())
        self.assertTrue(J.validate(model.space).passed)
        N = nijenhuis(model, J)
        self.assertFalse(N.is_zero())
        self.assertTrue(nijenhuis_identities(model, J, N).passed)

    def test_twist_breaks_the_second_structure(self):
        H = FormField(4, 4, 3, {(0, 1, 2): TrigPoly.cos_theta(4, 0)})
        model = ExactModel(4, H, name="t4-twisted")
        pair = flat_pair(model)
        self.assertTrue(is_integrable(model, pair.complex))
        self.assertFalse(is_integrable(model, pair.second))
        verdict = gk_bracket_check(model, pair)
        self.assertFalse(verdict.passed)
        self.assertTrue(verdict.check("closure and integrability agree").passed)
        with self.assertRaises(PreconditionError):
            mixed_bracket_identity(model, pair)

    def test_b_transform_keeps_generalized_kahler(self):
        model = ExactModel(4)
        B = FormField(4, 4, 2, {(0, 2): TrigPoly.one(4)})
        pair = flat_pair(model)
        shifted = b_transform_structure(model, B, pair)
        self.assertNotEqual(shifted.complex.endo, pair.complex.endo)
        self.assertTrue(shifted.validate(model.space).passed)
        self.assertTrue(is_generalized_kahler(model, shifted))

    def test_one_zero_bundle_is_maximal_isotropic(self):
        model = ExactModel(2)
        J = complex_lift(model, [[0, -1], [1, 0]])
        bundle = one_zero_bundle(model, J)
        self.assertEqual(len(bundle), 2)
        i = ComplexPoly.i(2)
        for u in bundle:
            self.assertEqual(J.apply(u), tuple(i * x for x in u))
            for v in bundle:
                self.assertTrue(model.pair(u, v).is_zero())


class TestHyperTriple(unittest.TestCase):
    def test_quaternion_triple(self):
        model = QuadLieModel([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], {})
        triple = HyperTriple.from_pair(GenComplex(constant_endo(0, L_I), "I"),
                                       GenComplex(constant_endo(0, L_J), "J"))
        self.assertTrue(triple.validate(model.space).passed)
        square = triple.j3.endo @ triple.j3.endo
        self.assertEqual(square, -EndoField.identity(0, 4))

    def test_commuting_pair_is_not_a_triple(self):
        model = QuadLieModel([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], {})
        I = GenComplex(constant_endo(0, L_I), "I")
        verdict = HyperTriple.from_pair(I, I).validate(model.space)
        self.assertFalse(verdict.passed)
        self.assertFalse(verdict.check("J1, J2 anticommute").passed)


if __name__ == '__main__':
    unittest.main()
