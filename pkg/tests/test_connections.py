import unittest
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from src.connections import (BornStructure, D1, GenConnection, adapted_algebra, add_tensors, born_check,
                             born_commutant, born_connection, bracket_torsion_defect, cyclic_sum,
                             hypercomplex_connection, intrinsic_torsion_J, kn_connection, levi_civita,
                             levi_civita_check, make_torsion_free, named_algebra, partial,
                             projector_identities, prolongation, rank_two_shift, wedge_shift)
from src.courant import ExactModel, QuadLieModel
from src.linalg import EndoField, FormField
from src.ring import TrigPoly, multipliers
from src.structures import HyperTriple, complex_lift, metric_from_g, nijenhuis
from src.utils.errors import MalformedInputError, PreconditionError

J0 = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]

covectors = st.lists(st.integers(-2, 2), min_size=4, max_size=4)
components = st.tuples(st.integers(-2, 2), st.integers(0, 6))
sections = st.lists(components, min_size=6, max_size=6)
shift_entries = st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5),
                                   st.integers(-2, 2), st.integers(0, 6)), min_size=1, max_size=4)


def t3_section(model, spec):
    basis = multipliers(3)
    return model.section([basis[index].scale(coef) for coef, index in spec])


def twisted_t3():
    return ExactModel(3, FormField(3, 3, 3, {(0, 1, 2): TrigPoly.cos_theta(3, 0)}), name="t3-h")


def born_t4():
    m = 4
    c, s = TrigPoly.cos_theta(m, 0), TrigPoly.sin_theta(m, 0)
    zero = TrigPoly.zero(m)
    eta = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]]
    identity = [[int(i == j) for j in range(m)] for i in range(m)]
    K = EndoField(m, [[zero, zero, c, -s], [zero, zero, s, c], [c, s, zero, zero], [-s, c, zero, zero]])
    return BornStructure(m, eta, eta, identity, K)


class TestTensors(unittest.TestCase):
    @settings(max_examples=40, deadline=None)
    @given(covectors, covectors)
    def test_wedge_shift_is_torsion_free(self, alpha, beta):
        eta = wedge_shift(alpha, beta)
        self.assertEqual(cyclic_sum(eta), {})
        for (a, b, c), value in eta.items():
            self.assertEqual(eta.get((a, c, b), 0), -value)

    def test_rank_two_shift_keeps_torsion(self):
        model = QuadLieModel([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]], {})
        D = GenConnection.flat(model).plus(rank_two_shift(model))
        self.assertTrue(D.is_metric())
        self.assertTrue(D.torsion().is_zero())
        self.assertNotEqual(D, GenConnection.flat(model))

    def test_partial_rejects_non_skew(self):
        with self.assertRaises(PreconditionError):
            partial({(0, 0, 1): TrigPoly.one(0)}, 0, 3)


class TestTorsion(unittest.TestCase):
    def test_flat_torsion_is_minus_structure(self):
        model = twisted_t3()
        D0 = GenConnection.flat(model)
        self.assertEqual(D0.torsion(), -model.structure_form())

    def test_make_torsion_free(self):
        model = twisted_t3()
        D = make_torsion_free(model, GenConnection.flat(model))
        self.assertTrue(D.is_metric())
        self.assertTrue(D.torsion().is_zero())

    def test_bracket_torsion_identity(self):
        model = twisted_t3()
        D = GenConnection.flat(model)
        c = TrigPoly.cos_theta(3, 1)
        u = model.section([c, 0, 1, 0, 0, 0])
        v = model.section([0, 1, 0, c, 0, 0])
        w = model.section([0, 0, 1, 0, 0, TrigPoly.sin_theta(3, 2)])
        self.assertTrue(bracket_torsion_defect(D, u, v, w).is_zero())

    @settings(max_examples=50, deadline=None)
    @given(sections, sections, sections)
    def test_bracket_torsion_identity_on_random_sections(self, u, v, w):
        model = twisted_t3()
        D = make_torsion_free(model, GenConnection.flat(model))
        u, v, w = (t3_section(model, spec) for spec in (u, v, w))
        self.assertTrue(bracket_torsion_defect(D, u, v, w).is_zero())

    @settings(max_examples=20, deadline=None)
    @given(shift_entries)
    def test_torsion_of_shift_is_partial(self, entries):
        model = twisted_t3()
        basis = multipliers(3)
        eta = {}
        for a, b, c, coef, index in entries:
            if b == c:
                continue
            value = basis[index].scale(coef)
            eta = add_tensors((Fraction(1), eta), (Fraction(1), {(a, b, c): value, (a, c, b): -value}))
        D = GenConnection.flat(model)
        self.assertEqual(D.plus(eta).torsion() - D.torsion(), partial(eta, model.m, model.rank))

    def test_levi_civita_of_constant_metric(self):
        model = twisted_t3()
        G = metric_from_g(model, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        D = levi_civita(model, G)
        self.assertTrue(levi_civita_check(model, G, D).passed)


class TestAdaptedConnections(unittest.TestCase):
    def wobbled(self, model):
        s = TrigPoly.sin_theta(4, 0)
        rows = [[TrigPoly.constant(4, x) for x in row] for row in J0]
        rows[0][2] = rows[0][2] + s
        rows[1][3] = rows[1][3] - s
        return complex_lift(model, rows)

    def test_projector_identities(self):
        model = ExactModel(2)
        J = complex_lift(model, [[0, -1], [1, 0]])
        self.assertTrue(projector_identities(J, model.rank, model.m).passed)

    def test_adapted_connection_has_torsion_quarter_nijenhuis(self):
        model = ExactModel(4)
        J = self.wobbled(model)
        D = make_torsion_free(model, GenConnection.flat(model))
        quarter = nijenhuis(model, J).scale(Fraction(1, 4))
        self.assertFalse(quarter.is_zero())
        first = D1(model, J, D)
        self.assertTrue(first.preserves(J.endo))
        self.assertEqual(intrinsic_torsion_J(model, J, first), quarter)
        D_tilde = kn_connection(model, J, D)
        self.assertTrue(D_tilde.preserves(J.endo))
        self.assertEqual(D_tilde.torsion(), quarter)

    def test_intrinsic_torsion_needs_adapted_connection(self):
        model = ExactModel(4)
        J = self.wobbled(model)
        with self.assertRaises(PreconditionError):
            intrinsic_torsion_J(model, J, GenConnection.flat(model))


class TestHypercomplexConnection(unittest.TestCase):
    I0 = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
    K0 = [[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]]

    def rotated(self, model):
        """K0 conjugated by the rotation through theta_1 in the (x1, x2)-plane."""
        c, s = TrigPoly.cos_theta(4, 0), TrigPoly.sin_theta(4, 0)
        zero = TrigPoly.zero(4)
        return complex_lift(model, [[zero, zero, -c, -s], [zero, zero, -s, c],
                                    [c, s, zero, zero], [s, -c, zero, zero]], name="J2")

    def assertHypercomplex(self, model, triple, D_tilde):
        self.assertTrue(D_tilde.is_metric())
        for j in triple.structures():
            self.assertTrue(D_tilde.preserves(j.endo), j.name)
        total = None
        for j in triple.structures():
            N = nijenhuis(model, j)
            total = N if total is None else total + N
        self.assertEqual(D_tilde.torsion(), total.scale(Fraction(1, 6)))
        return total

    def test_constant_triple_gives_torsion_free_connection(self):
        model = ExactModel(4)
        triple = HyperTriple.from_pair(complex_lift(model, self.I0, name="J1"),
                                       complex_lift(model, self.K0, name="J2"))
        D_tilde = hypercomplex_connection(model, triple, GenConnection.flat(model))
        total = self.assertHypercomplex(model, triple, D_tilde)
        self.assertTrue(total.is_zero())

    def test_rotated_triple(self):
        model = ExactModel(4)
        j1 = complex_lift(model, self.I0, name="J1")
        triple = HyperTriple.from_pair(j1, self.rotated(model))
        self.assertTrue(triple.validate(model.space).passed)
        self.assertTrue(nijenhuis(model, j1).is_zero())
        self.assertFalse(nijenhuis(model, triple.j2).is_zero())
        D_tilde = hypercomplex_connection(model, triple, GenConnection.flat(model))
        total = self.assertHypercomplex(model, triple, D_tilde)
        self.assertFalse(total.is_zero())

    def test_needs_metric_connection(self):
        model = ExactModel(4)
        triple = HyperTriple.from_pair(complex_lift(model, self.I0), complex_lift(model, self.K0))
        D = GenConnection(model, {(0, 0, 1): TrigPoly.one(4)})
        with self.assertRaises(PreconditionError):
            hypercomplex_connection(model, triple, D)


class TestProlongation(unittest.TestCase):
    def test_orthogonal_algebras(self):
        self.assertEqual(prolongation(named_algebra("so:1,1")).dimension, 2)
        self.assertEqual(prolongation(named_algebra("so:2,1")).dimension, 8)
        self.assertEqual(prolongation(named_algebra("so:2,2")).dimension, 20)

    def test_born_commutant_has_no_prolongation(self):
        for n in (2, 3):
            result = prolongation(named_algebra(f"delta-so:{n}"))
            self.assertEqual(result.dimension, 0)
            self.assertEqual(result.to_json()["basis"], [])

    def test_unitary_commutant(self):
        algebra = adapted_algebra([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], [J0])
        self.assertEqual(algebra.dimension, 4)
        self.assertEqual(named_algebra("u:1,1").dimension, 4)

    def test_unknown_algebra(self):
        for name in ("sp:2", "so:a,b", "so:1"):
            with self.assertRaises(MalformedInputError):
                named_algebra(name)


class TestBorn(unittest.TestCase):
    def test_born_connection(self):
        born = born_t4()
        self.assertTrue(born.validate().passed)
        verdict = born_check(born, born_connection(born))
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])
        self.assertEqual(verdict.data["prolongation_dimension"], 0)

    def test_constant_born_structure_is_flat(self):
        m = 4
        eta = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]]
        identity = [[int(i == j) for j in range(m)] for i in range(m)]
        K = EndoField(m, [[TrigPoly.constant(m, int(abs(i - j) == 2)) for j in range(m)] for i in range(m)])
        born = BornStructure(m, eta, eta, identity, K)
        nabla = born_connection(born)
        self.assertTrue(all(g.is_zero() for g in nabla.gamma))
        verdict = born_check(born, nabla)
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])
        self.assertEqual(verdict.data["commutant_dimension"], 1)

    def test_commutant_matches_delta_so(self):
        born = born_t4()
        for point in ((0, 0, 0, 0), (1, 0, 0, 0), (3, 2, 0, 1)):
            commutant = born_commutant(born, point)
            self.assertEqual(commutant.dimension, named_algebra("delta-so:2").dimension)
            self.assertEqual(prolongation(commutant).dimension, 0)

    def test_bad_born_data(self):
        born = born_t4()
        born.K = EndoField.identity(4, 4)
        self.assertFalse(born.validate().check("K skew for eta").passed)
        with self.assertRaises(PreconditionError):
            born_connection(born)


if __name__ == '__main__':
    unittest.main()
