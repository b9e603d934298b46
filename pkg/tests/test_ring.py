import unittest
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from src.ring import (ComplexPoly, TrigPoly, grid_points, monomials, multipliers, rat_str, strip_common_factor,
                      to_rat, unit_frequency)
from src.utils.errors import DimensionMismatchError, MalformedInputError, PreconditionError

M = 2

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)
frequencies = st.tuples(st.integers(-2, 2), st.integers(-2, 2))
terms = st.dictionaries(st.tuples(st.sampled_from(["cos", "sin"]), frequencies), rationals, max_size=4)
polys = terms.map(lambda t: TrigPoly(M, t))
points = st.tuples(st.integers(0, 3), st.integers(0, 3))


class TestRationals(unittest.TestCase):
    def test_to_rat_parses_strings(self):
        self.assertEqual(to_rat("3/6"), Fraction(1, 2))
        self.assertEqual(to_rat(" -4 "), Fraction(-4))
        self.assertEqual(to_rat(7), Fraction(7))

    def test_to_rat_rejects_garbage(self):
        for bad in ("1/0", "abc", 1.5, True, None):
            with self.assertRaises(MalformedInputError):
                to_rat(bad)

    def test_rat_str(self):
        self.assertEqual(rat_str(Fraction(3)), "3")
        self.assertEqual(rat_str(Fraction(-2, 4)), "-1/2")


class TestTrigPoly(unittest.TestCase):
    def test_canonical_form_merges_negated_frequencies(self):
        a = TrigPoly(M, {("cos", (-1, 0)): 1, ("cos", (1, 0)): 1})
        self.assertEqual(a, TrigPoly.cos(M, (1, 0), 2))
        b = TrigPoly(M, {("sin", (-1, 0)): 1})
        self.assertEqual(b, TrigPoly.sin(M, (1, 0), -1))
        self.assertTrue(TrigPoly(M, {("sin", (0, 0)): 5}).is_zero())

    def test_product_to_sum(self):
        c = TrigPoly.cos_theta(M, 0)
        s = TrigPoly.sin_theta(M, 0)
        # cos^2 + sin^2 = 1
        self.assertEqual(c * c + s * s, TrigPoly.one(M))
        # 2 sin cos = sin 2t
        self.assertEqual((s * c).scale(2), TrigPoly.sin(M, (2, 0)))

    def test_derive(self):
        c = TrigPoly.cos_theta(M, 1)
        self.assertEqual(c.derive(1), -TrigPoly.sin_theta(M, 1))
        self.assertTrue(c.derive(0).is_zero())
        with self.assertRaises(DimensionMismatchError):
            c.derive(2)

    def test_evaluate_on_quarter_grid(self):
        p = TrigPoly.cos_theta(M, 0) + TrigPoly.sin_theta(M, 1).scale(3)
        self.assertEqual(p.evaluate((0, 1)), Fraction(4))
        self.assertEqual(p.evaluate((2, 3)), Fraction(-4))
        with self.assertRaises(PreconditionError):
            p.evaluate((Fraction(1, 2), 0))

    def test_degree_and_active_coordinates(self):
        p = TrigPoly.cos(M, (0, 3)) + TrigPoly.constant(M, 2)
        self.assertEqual(p.degree(), 3)
        self.assertEqual(p.active_coordinates(), {1})
        self.assertEqual(p.constant_term(), Fraction(2))
        self.assertEqual(p.coefficient("cos", (0, -3)), Fraction(1))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            TrigPoly.one(2) + TrigPoly.one(3)
        with self.assertRaises(DimensionMismatchError):
            TrigPoly(2, {("cos", (1,)): 1})

    def test_json(self):
        p = TrigPoly.sin(M, (1, -1), Fraction(2, 3))
        self.assertEqual(TrigPoly.from_json(p.to_json()), p)
        with self.assertRaises(MalformedInputError):
            TrigPoly.from_json({"terms": []})
        with self.assertRaises(MalformedInputError):
            TrigPoly.from_json({"m": 2, "terms": [{"kind": "tan", "k": [1, 0], "c": "1"}]})

    @settings(max_examples=40, deadline=None)
    @given(polys, polys, polys)
    def test_ring_axioms(self, a, b, c):
        self.assertEqual(a * (b + c), a * b + a * c)
        self.assertEqual((a * b) * c, a * (b * c))
        self.assertEqual(a * b, b * a)
        self.assertTrue((a - a).is_zero())

    @settings(max_examples=40, deadline=None)
    @given(polys, polys)
    def test_leibniz_rule(self, a, b):
        for i in range(M):
            self.assertEqual((a * b).derive(i), a.derive(i) * b + a * b.derive(i))

    @settings(max_examples=40, deadline=None)
    @given(polys, polys, points)
    def test_evaluation_is_a_ring_map(self, a, b, point):
        self.assertEqual((a * b).evaluate(point), a.evaluate(point) * b.evaluate(point))
        self.assertEqual((a + b).evaluate(point), a.evaluate(point) + b.evaluate(point))


class TestComplexPoly(unittest.TestCase):
    def test_i_squared(self):
        i = ComplexPoly.i(M)
        self.assertEqual(i * i, ComplexPoly(TrigPoly.constant(M, -1)))

    def test_conjugate_product_is_real(self):
        z = ComplexPoly(TrigPoly.cos_theta(M, 0), TrigPoly.sin_theta(M, 0))
        self.assertEqual(z * z.conjugate(), ComplexPoly(TrigPoly.one(M)))

    def test_evaluate(self):
        z = ComplexPoly(TrigPoly.one(M), TrigPoly.cos_theta(M, 1))
        self.assertEqual(z.evaluate((0, 2)), (Fraction(1), Fraction(-1)))


class TestHelpers(unittest.TestCase):
    def test_multipliers(self):
        self.assertEqual(len(multipliers(3)), 7)

    def test_grid_points(self):
        self.assertEqual(len(list(grid_points(2))), 16)

    def test_monomials_restricted_to_coordinates(self):
        basis = monomials(3, 1, coordinates=[2])
        self.assertEqual(len(basis), 3)
        for poly in basis:
            self.assertTrue(poly.active_coordinates() <= {2})

    def test_unit_frequency(self):
        self.assertEqual(unit_frequency(3, 1, 2), (0, 2, 0))
        with self.assertRaises(DimensionMismatchError):
            unit_frequency(3, 3)

    def test_strip_common_factor(self):
        c, s = TrigPoly.cos_theta(2, 0), TrigPoly.sin_theta(2, 1)
        a, b = strip_common_factor([ComplexPoly(c.scale(3)), ComplexPoly(c * s)])
        self.assertEqual(a * ComplexPoly(s), b * ComplexPoly(TrigPoly.constant(2, 3)))
        values = {a.evaluate(point) for point in grid_points(2)}
        self.assertEqual(len(values), 1)
        self.assertNotEqual(values.pop(), (0, 0))

    def test_strip_common_factor_keeps_coprime_values(self):
        one, c = ComplexPoly(TrigPoly.one(2)), ComplexPoly(TrigPoly.cos_theta(2, 0))
        a, b = strip_common_factor([one, c])
        self.assertEqual(a * c, b * one)
        zeros = [ComplexPoly(TrigPoly.zero(2))] * 2
        self.assertEqual(strip_common_factor(zeros), zeros)


if __name__ == '__main__':
    unittest.main()
