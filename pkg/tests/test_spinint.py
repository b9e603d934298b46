import unittest

from src.clifford import is_pure
from src.connections import levi_civita
from src.courant import ExactModel
from src.linalg import FormField
from src.ring import ComplexPoly, TrigPoly
from src.spinint import (SplitSpinorData, dirac_structure_equiv, gk_spinor_check, projection_identity,
                         scalar_solve, second_levi_civita, span_solve, split_dirac_check, split_pure_spinor)
from src.structures import HermitianPair, complex_lift, metric_from_g
from src.utils.errors import DimensionMismatchError, PreconditionError

G4 = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]]
J0 = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]


def flat_pair(model):
    return HermitianPair(metric_from_g(model, G4), complex_lift(model, J0))


class TestFeasibility(unittest.TestCase):
    def test_span_solve_finds_coefficients(self):
        m = 1
        c = TrigPoly.cos_theta(m, 0)
        target = {0: c * 3, 1: TrigPoly.constant(m, 2)}
        columns = [{0: c}, {1: TrigPoly.one(m)}]
        solution = span_solve(target, columns, m)
        self.assertIsNotNone(solution)

    def test_scalar_solve(self):
        model = ExactModel(1)
        module = model.spinor_module()
        eta = module.basis_spinor(0)
        solution = scalar_solve(eta, eta.scale(TrigPoly.cos_theta(1, 0)), 1, 1)
        self.assertEqual(solution, ComplexPoly(TrigPoly.cos_theta(1, 0)))
        self.assertIsNone(scalar_solve(eta, module.basis_spinor(1), 1, 1))


class TestDiracStructures(unittest.TestCase):
    def setUp(self):
        self.model = ExactModel(3, name="t3")
        self.c = TrigPoly.cos_theta(3, 0)

    def test_tangent_and_cotangent(self):
        model = self.model
        tangent = [model.vector([int(i == j) for j in range(3)]) for i in range(3)]
        cotangent = [model.covector([int(i == j) for j in range(3)]) for i in range(3)]
        for name, basis in (("tangent", tangent), ("cotangent", cotangent)):
            verdict = dirac_structure_equiv(self.model, basis, name=name)
            self.assertTrue(verdict.passed, [ch.to_dict() for ch in verdict.failures])
            self.assertTrue(is_pure(model.spinor_module(), verdict.data["spinor"]))

    def test_graph_of_closed_form(self):
        c = self.c
        basis = [self.model.section([1, 0, 0, 0, c, 0]),
                 self.model.section([0, 1, 0, -c, 0, 0]),
                 self.model.section([0, 0, 1, 0, 0, 0])]
        verdict = dirac_structure_equiv(self.model, basis, name="graph-closed")
        self.assertTrue(verdict.passed, [ch.to_dict() for ch in verdict.failures])

    def test_graph_of_non_closed_form(self):
        c = self.c
        basis = [self.model.section([1, 0, 0, 0, 0, 0]),
                 self.model.section([0, 1, 0, 0, 0, c]),
                 self.model.section([0, 0, 1, 0, -c, 0])]
        verdict = dirac_structure_equiv(self.model, basis, name="graph-open")
        self.assertFalse(verdict.passed)
        self.assertTrue(verdict.check("bracket closure and projective closedness agree").passed)
        self.assertFalse(verdict.data["bracket_closed"])
        self.assertIsNotNone(verdict.check("Dirac structure").witness)

    def test_plane_turning_from_tangent_to_cotangent(self):
        model = ExactModel(2, name="t2")
        c, s = TrigPoly.cos_theta(2, 0), TrigPoly.sin_theta(2, 0).scale(2)
        basis = [model.section([c, 0, 0, s]), model.section([0, c, -s, 0])]
        verdict = dirac_structure_equiv(model, basis, name="turning")
        self.assertTrue(verdict.check("bracket closure and projective closedness agree").passed)
        self.assertTrue(verdict.data["bracket_closed"])
        self.assertTrue(is_pure(model.spinor_module(), verdict.data["spinor"]))

    def test_rejects_bad_subbundles(self):
        model = self.model
        with self.assertRaises(DimensionMismatchError):
            dirac_structure_equiv(model, [model.vector([1, 0, 0])])
        not_isotropic = [model.section([1, 0, 0, 1, 0, 0]), model.vector([0, 1, 0]), model.vector([0, 0, 1])]
        with self.assertRaises(PreconditionError):
            dirac_structure_equiv(model, not_isotropic)


class TestSplitSpinors(unittest.TestCase):
    def test_split_dirac_operator(self):
        model = ExactModel(4, name="t4")
        pair = flat_pair(model)
        split = SplitSpinorData.build(model, pair.metric, levi_civita(model, pair.metric))
        verdict = split_dirac_check(model, split)
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])
        for sign in (1, -1):
            self.assertTrue(is_pure(split.module(sign), split_pure_spinor(split, pair, sign)))

    def test_second_levi_civita_connection(self):
        model = ExactModel(4, name="t4")
        metric = metric_from_g(model, G4)
        D = levi_civita(model, metric)
        other = second_levi_civita(model, metric, D)
        self.assertIsNotNone(other)
        self.assertNotEqual(other.eta, D.eta)
        self.assertTrue(projection_identity(model, metric, other))


class TestSpinorGeneralizedKahler(unittest.TestCase):
    def test_flat_pair(self):
        model = ExactModel(4, name="t4")
        verdict = gk_spinor_check(model, flat_pair(model))
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])
        self.assertTrue(verdict.data["bracket_gk"])

    def test_twisted_model_is_not_generalized_kahler(self):
        H = FormField(4, 4, 3, {(0, 1, 2): TrigPoly.cos_theta(4, 0)})
        model = ExactModel(4, H, name="t4-twisted")
        verdict = gk_spinor_check(model, flat_pair(model))
        self.assertFalse(verdict.passed)
        self.assertFalse(verdict.data["bracket_gk"])
        self.assertFalse(verdict.data["spinor_gk"])
        self.assertTrue(verdict.check("spinor and bracket criteria agree").passed)


if __name__ == '__main__':
    unittest.main()
