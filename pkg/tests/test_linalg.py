import unittest
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from src.linalg import (EndoField, FormField, QuadSpace, TensorField, bivector_as_endo,
                        complex_nullspace, congruence_diagonalize, constant_endo, determinant,
                        exterior_derivative, frame_section, inverse, is_totally_skew, mat_mul, nullspace,
                        rank, rref, skew3, solve)
from src.ring import TrigPoly
from src.utils.errors import DimensionMismatchError, PreconditionError

F = Fraction
small = st.integers(-3, 3).map(F)
matrices = st.lists(st.lists(small, min_size=3, max_size=3), min_size=1, max_size=3)


def sym_gram(entries):
    a, b, c, d, e, f = entries
    return [[a, b, c], [b, d, e], [c, e, f]]


class TestExactLinearAlgebra(unittest.TestCase):
    def test_rref_and_rank(self):
        rows = [[F(1), F(2), F(3)], [F(2), F(4), F(6)], [F(0), F(1), F(1)]]
        reduced, pivots = rref(rows, 3)
        self.assertEqual(pivots, (0, 1))
        self.assertEqual(reduced[0], [F(1), F(0), F(1)])
        self.assertEqual(rank(rows, 3), 2)

    def test_solve_inconsistent(self):
        rows = [[F(1), F(1)], [F(1), F(1)]]
        self.assertIsNone(solve(rows, [F(1), F(2)], 2))
        self.assertEqual(solve(rows, [F(3), F(3)], 2), [F(3), F(0)])

    def test_inverse(self):
        a = [[F(2), F(1)], [F(1), F(1)]]
        self.assertEqual(mat_mul(a, inverse(a)), [[F(1), F(0)], [F(0), F(1)]])
        with self.assertRaises(PreconditionError):
            inverse([[F(1), F(2)], [F(2), F(4)]])

    def test_determinant(self):
        self.assertEqual(determinant([[F(2), F(1)], [F(1), F(1)]]), 1)
        self.assertEqual(determinant([[F(1), F(2)], [F(2), F(4)]]), 0)
        self.assertEqual(determinant([[F(1, 2), F(0), F(0)], [F(5), F(3), F(0)], [F(1), F(1), F(-2)]]), -3)

    def test_complex_nullspace(self):
        # x + i y = 0 over Q(i)
        kernel = complex_nullspace([[(F(1), F(0)), (F(0), F(1))]], 2)
        self.assertEqual(len(kernel), 1)

    @settings(max_examples=30, deadline=None)
    @given(matrices)
    def test_nullspace_is_kernel(self, rows):
        for vec in nullspace(rows, 3):
            for row in rows:
                self.assertEqual(sum(a * b for a, b in zip(row, vec)), 0)
        self.assertEqual(len(nullspace(rows, 3)) + rank(rows, 3), 3)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(small, min_size=6, max_size=6))
    def test_congruence_diagonalize(self, entries):
        gram = sym_gram(entries)
        diag, vecs = congruence_diagonalize(gram)
        for i in range(3):
            for j in range(3):
                value = sum(vecs[i][a] * gram[a][b] * vecs[j][b] for a in range(3) for b in range(3))
                self.assertEqual(value, diag[i] if i == j else 0)


class TestQuadSpace(unittest.TestCase):
    def test_signature_of_hyperbolic_plane(self):
        space = QuadSpace([[0, 1], [1, 0]])
        self.assertEqual(space.signature, (1, 1))
        self.assertTrue(space.is_neutral())

    def test_rejects_bad_gram(self):
        with self.assertRaises(PreconditionError):
            QuadSpace([[1, 2], [0, 1]])
        with self.assertRaises(PreconditionError):
            QuadSpace([[1, 1], [1, 1]])
        with self.assertRaises(DimensionMismatchError):
            QuadSpace([[1, 0], [0]])

    def test_pair(self):
        space = QuadSpace([[0, 1], [1, 0]])
        u = frame_section(1, 2, 0, TrigPoly.cos_theta(1, 0))
        v = frame_section(1, 2, 1)
        self.assertEqual(space.pair(u, v), TrigPoly.cos_theta(1, 0))
        self.assertEqual(space.pair_const([F(1), F(2)], [F(3), F(4)]), F(10))


class TestForms(unittest.TestCase):
    def test_antisymmetric_storage(self):
        one = TrigPoly.one(1)
        form = FormField(1, 3, 2, {(1, 0): one})
        self.assertEqual(form.component((0, 1)), -one)
        self.assertTrue(FormField(1, 3, 2, {(1, 1): one}).is_zero())

    def test_wedge_and_interior(self):
        one = TrigPoly.one(1)
        a = FormField(1, 3, 1, {(0,): one})
        b = FormField(1, 3, 1, {(1,): one})
        ab = a.wedge(b)
        self.assertEqual(ab, -b.wedge(a))
        self.assertEqual(ab.interior(frame_section(1, 3, 0)), b)
        self.assertTrue(a.wedge(a).is_zero())

    def test_evaluate(self):
        one = TrigPoly.one(2)
        form = FormField(2, 2, 2, {(0, 1): one})
        u = frame_section(2, 2, 0)
        v = frame_section(2, 2, 1)
        self.assertEqual(form.evaluate(u, v), one)
        self.assertEqual(form.evaluate(v, u), -one)

    def test_exterior_derivative_squares_to_zero(self):
        m = 3
        form = FormField(m, m, 1, {(0,): TrigPoly.cos(m, (0, 1, 1)), (2,): TrigPoly.sin_theta(m, 0)})
        d1 = exterior_derivative(form)
        self.assertFalse(d1.is_zero())
        self.assertTrue(exterior_derivative(d1).is_zero())

    def test_skew3_fixes_forms(self):
        space = QuadSpace([[1, 0, 0], [0, 1, 0], [0, 0, -1]])
        form = FormField(1, 3, 3, {(0, 1, 2): TrigPoly.one(1)})
        tensor = form.to_tensor(space)
        self.assertTrue(is_totally_skew(tensor))
        self.assertEqual(skew3(tensor), form)

    def test_lower_then_raise(self):
        space = QuadSpace([[0, 1], [1, 0]])
        t = TensorField(space, 1, ("up",), {(0,): TrigPoly.one(1)})
        lowered = t.lower(0)
        self.assertEqual(lowered.component((1,)), TrigPoly.one(1))
        self.assertEqual(lowered.raise_(0), t)
        with self.assertRaises(DimensionMismatchError):
            lowered.lower(0)


class TestEndomorphisms(unittest.TestCase):
    def test_adjoint_of_skew_is_negative(self):
        space = QuadSpace([[0, 1], [1, 0]])
        a = constant_endo(1, [[1, 0], [0, -1]])
        self.assertTrue(a.is_skew(space))
        self.assertEqual(a.adjoint(space), -a)

    def test_bivector_is_skew(self):
        space = QuadSpace([[1, 0, 0], [0, 1, 0], [0, 0, -1]])
        b = FormField(1, 3, 2, {(0, 2): TrigPoly.one(1)})
        endo = bivector_as_endo(b, space)
        self.assertTrue(endo.is_skew(space))
        self.assertFalse(endo.is_zero())

    def test_complex_structure_squares_to_minus_one(self):
        j = constant_endo(1, [[0, -1], [1, 0]])
        self.assertEqual(j @ j, -EndoField.identity(1, 2))
        self.assertTrue(j.commutator(j).is_zero())
        self.assertEqual(j.constant_matrix(), [[F(0), F(-1)], [F(1), F(0)]])

    def test_constant_matrix_requires_constant_field(self):
        field = EndoField(1, [[TrigPoly.cos_theta(1, 0), 0], [0, 1]])
        with self.assertRaises(PreconditionError):
            field.constant_matrix()


if __name__ == '__main__':
    unittest.main()
