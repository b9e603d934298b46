import unittest
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from src.clifford import (CliffordAlgebra, CliffordElement, GradedTensorModule, SpinorMatrix,
                          Spinor, SpinorModule, grading_split, is_pure, null_space, projectively_equal,
                          rational_isotropic_pair, spinor_of_isotropic, three_form_element)
from src.courant import ExactModel
from src.linalg import FormField, QuadSpace, const_section
from src.ring import TrigPoly, grid_points
from src.utils.errors import DimensionMismatchError, PreconditionError, UnsupportedSignatureError

NEUTRAL_4 = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]]
HYPERBOLIC = [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]

vectors = st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=4), min_size=4, max_size=4)


class TestCliffordAlgebra(unittest.TestCase):
    def setUp(self):
        self.space = QuadSpace(NEUTRAL_4)
        self.algebra = CliffordAlgebra(self.space)

    def test_frame_vectors_square_to_metric(self):
        for a in range(4):
            e = self.algebra.frame_vector(a)
            self.assertEqual(e * e, self.algebra.scalar(self.space.gram[a][a]))

    def test_blades_must_be_increasing(self):
        with self.assertRaises(DimensionMismatchError):
            CliffordElement(self.algebra, {(1, 0): Fraction(1)})

    @settings(max_examples=30, deadline=None)
    @given(vectors, vectors)
    def test_clifford_relation(self, u, v):
        for gram in (NEUTRAL_4, HYPERBOLIC):
            space = QuadSpace(gram)
            algebra = CliffordAlgebra(space)
            x, y = algebra.vector(u), algebra.vector(v)
            self.assertEqual(x * y + y * x, algebra.scalar(2 * space.pair_const(u, v)))

    @settings(max_examples=20, deadline=None)
    @given(vectors, vectors, vectors)
    def test_triple_reversal(self, u, v, w):
        x, y, z = self.algebra.vector(u), self.algebra.vector(v), self.algebra.vector(w)
        expected = y.scale(-2 * self.space.pair_const(u, w)) + x.scale(2 * self.space.pair_const(v, w))
        self.assertEqual(x * y * z - z * x * y, expected)

    def test_three_form_squares_to_scalar(self):
        space = QuadSpace([[1, 0, 0], [0, 1, 0], [0, 0, -1]])
        algebra = CliffordAlgebra(space)
        t = three_form_element(algebra, FormField(0, 3, 3, {(0, 1, 2): Fraction(1)}))
        self.assertEqual(t.parity(), 1)
        self.assertEqual(t * t, algebra.scalar(Fraction(1)))


class TestSpinorModule(unittest.TestCase):
    def setUp(self):
        self.space = QuadSpace(NEUTRAL_4)
        self.module = SpinorModule.auto(self.space)

    def test_generators_satisfy_clifford_relation(self):
        identity = SpinorMatrix.identity(self.module.dim)
        for a in range(4):
            for b in range(4):
                ga, gb = self.module.generators[a], self.module.generators[b]
                self.assertEqual(ga @ gb + gb @ ga, identity.scale(2 * self.space.gram[a][b]))

    def test_isotropic_pair_is_dual(self):
        p, q = rational_isotropic_pair(self.space)
        for a in range(2):
            for b in range(2):
                self.assertEqual(self.space.pair_const(p[a], p[b]), 0)
                self.assertEqual(2 * self.space.pair_const(p[a], q[b]), int(a == b))

    def test_non_neutral_space_is_rejected(self):
        with self.assertRaises(UnsupportedSignatureError):
            SpinorModule.auto(QuadSpace([[1, 0], [0, 1]]))

    def test_grading_projectors(self):
        even, odd = grading_split(self.module)
        identity = SpinorMatrix.identity(self.module.dim)
        self.assertEqual(even + odd, identity)
        self.assertEqual(even @ even, even)
        self.assertTrue((even @ odd).is_zero())

    def test_pure_spinors(self):
        vacuum = self.module.basis_spinor(0)
        self.assertTrue(is_pure(self.module, vacuum))
        self.assertEqual(len(null_space(self.module, vacuum)), 2)
        mixed = vacuum + self.module.basis_spinor(1)
        self.assertFalse(is_pure(self.module, mixed))

    def test_spinor_of_isotropic_subbundle(self):
        basis = [const_section(0, p) for p in self.module.p]
        eta = spinor_of_isotropic(self.module, basis)
        self.assertTrue(is_pure(self.module, eta))
        self.assertTrue(projectively_equal(eta, self.module.basis_spinor(3)))


class TestSpinorOfIsotropic(unittest.TestCase):
    def setUp(self):
        self.model = ExactModel(2, name="t2")
        self.module = self.model.spinor_module()

    def plane(self, a, b):
        return [self.model.section([a, 0, 0, b]), self.model.section([0, a, -b, 0])]

    def assertNowhereVanishing(self, eta):
        for point in grid_points(2):
            self.assertTrue(any(value.evaluate(point) != (0, 0) for value in eta.coeffs.values()), point)

    def test_common_factor_is_divided_out(self):
        a, b = TrigPoly.cos_theta(2, 0), TrigPoly.sin_theta(2, 0).scale(2)
        eta = spinor_of_isotropic(self.module, self.plane(a, b))
        self.assertTrue(is_pure(self.module, eta))
        self.assertNowhereVanishing(eta)
        self.assertTrue(projectively_equal(eta, Spinor(self.module.dim, {0: a, 3: -b})))

    def test_degenerate_subbundle_is_rejected(self):
        a, b = TrigPoly.cos_theta(2, 0), TrigPoly.sin_theta(2, 1)
        with self.assertRaises(PreconditionError):
            spinor_of_isotropic(self.module, self.plane(a, b))

    @settings(max_examples=8, deadline=None)
    @given(st.integers(min_value=1, max_value=2),
           st.fractions(min_value=-3, max_value=3, max_denominator=3).filter(lambda c: c != 0),
           st.booleans())
    def test_null_space_round_trip(self, k, c, turning):
        if turning:
            a, b = TrigPoly.cos(2, (k, 0)), TrigPoly.sin(2, (k, 0), c)
        else:
            a, b = TrigPoly.one(2), TrigPoly.cos(2, (k, 1), c)
        eta = spinor_of_isotropic(self.module, self.plane(a, b))
        self.assertTrue(projectively_equal(eta, Spinor(self.module.dim, {0: a, 3: -b})))
        again = spinor_of_isotropic(self.module, null_space(self.module, eta))
        self.assertTrue(projectively_equal(again, eta))
        self.assertNowhereVanishing(again)


class TestGradedTensorModule(unittest.TestCase):
    def test_graded_action_squares_to_norm(self):
        space = QuadSpace([[1, 0], [0, -1]])
        plus = SpinorModule.auto(space)
        minus = SpinorModule.auto(space)
        module = GradedTensorModule(plus, minus)
        self.assertEqual(module.dim, 4)
        v = const_section(0, [1, 0])
        s = Spinor(module.dim, {module.index(0, 0): TrigPoly.one(0)})
        twice = module.graded_action(v, v, module.graded_action(v, v, s))
        self.assertEqual(twice, s.scale(2))


if __name__ == '__main__':
    unittest.main()
