"""
Courant algebroid models over a framed torus.

Every model is a constant gram in a global frame (e_a), a constant anchor
matrix and frame brackets [e_a, e_b]. The Dorfman bracket of arbitrary
sections follows from the Leibniz rules

    [u, f v] = f [u, v] + pi(u)(f) v
    [f u, v] = f [u, v] - pi(v)(f) u + <u, v> pi* df

with pi* df = sum_l pi(e_l)(f) e~_l, so that <pi* df, v> = pi(v)(f).
"""

import itertools
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from src.clifford import SpinorModule, rational_isotropic_pair
from src.linalg import (FormField, QuadSpace, Section, EndoField, _is_zero, exterior_derivative,
                        nullspace)
from src.ring import ComplexPoly, TrigPoly, multipliers, to_rat
from src.utils.errors import (DimensionMismatchError, ModelValidationError,
                              PreconditionError)
from src.utils.reports import Verdict

logger = logging.getLogger(__name__)

Bracket = Dict[int, TrigPoly]


def _lift(m: int, value):
    if isinstance(value, (TrigPoly, ComplexPoly)):
        return value
    return TrigPoly.constant(m, value)


class CourantModel:
    """Frame presentation shared by all model variants."""

    variant = "abstract"

    def __init__(self, m: int, space: QuadSpace, anchor_matrix: Sequence[Sequence],
                 brackets: Dict[Tuple[int, int], Bracket], name: str = ""):
        self.m = m
        self.space = space
        self.rank = space.rank
        self.name = name or self.variant
        self.anchor_matrix = tuple(tuple(to_rat(c) for c in row) for row in anchor_matrix)
        if len(self.anchor_matrix) != m or any(len(row) != self.rank for row in self.anchor_matrix):
            raise DimensionMismatchError(f"Anchor matrix must be {m} x {self.rank}")
        self._anchor_cols = [[(i, self.anchor_matrix[i][a]) for i in range(m) if self.anchor_matrix[i][a]]
                             for a in range(self.rank)]
        self._brackets: Dict[Tuple[int, int], Bracket] = {}
        for (a, b), value in brackets.items():
            clean = {d: _lift(m, c) for d, c in value.items() if not _is_zero(c)}
            if clean:
                self._brackets[(a, b)] = clean
        self._structure: Optional[FormField] = None
        self.planes: Optional[Tuple[list, list]] = None
        self._module: Optional[SpinorModule] = None

    # -- sections --------------------------------------------------------

    def zero(self, complex_valued: bool = False):
        return ComplexPoly.zero(self.m) if complex_valued else TrigPoly.zero(self.m)

    def frame(self, a: int, coef=None) -> Section:
        coef = TrigPoly.one(self.m) if coef is None else _lift(self.m, coef)
        z = self.zero(isinstance(coef, ComplexPoly))
        return tuple(coef if b == a else z for b in range(self.rank))

    def section(self, values: Sequence) -> Section:
        if len(values) != self.rank:
            raise DimensionMismatchError(f"Section needs {self.rank} components, got {len(values)}")
        lifted = [_lift(self.m, v) for v in values]
        if any(isinstance(v, ComplexPoly) for v in lifted):
            lifted = [v if isinstance(v, ComplexPoly) else ComplexPoly(v) for v in lifted]
        return tuple(lifted)

    def _collect(self, entries: Dict[int, object], complex_valued: bool) -> Section:
        z = self.zero(complex_valued)
        out = []
        for a in range(self.rank):
            value = entries.get(a)
            if value is None:
                out.append(z)
            elif complex_valued and not isinstance(value, ComplexPoly):
                out.append(ComplexPoly(value))
            else:
                out.append(value)
        return tuple(out)

    # -- anchor ----------------------------------------------------------

    def derive_along(self, a: int, f):
        """pi(e_a)(f)."""
        total = None
        for i, c in self._anchor_cols[a]:
            term = f.derive(i) * c
            total = term if total is None else total + term
        return total if total is not None else f * 0

    def anchor_vector(self, u: Section) -> Tuple:
        """Coordinate components of the vector field pi(u)."""
        out = []
        for i in range(self.m):
            total = None
            for a, ua in enumerate(u):
                c = self.anchor_matrix[i][a]
                if c and not _is_zero(ua):
                    term = ua * c
                    total = term if total is None else total + term
            out.append(total if total is not None else self.zero(any(isinstance(x, ComplexPoly) for x in u)))
        return tuple(out)

    def anchor(self, u: Section, f):
        """pi(u)(f)."""
        total = None
        for a, ua in enumerate(u):
            if _is_zero(ua) or not self._anchor_cols[a]:
                continue
            term = ua * self.derive_along(a, f)
            total = term if total is None else total + term
        if total is None:
            return f * 0 if isinstance(f, (TrigPoly, ComplexPoly)) else self.zero()
        return total

    def pi_star_d(self, f) -> Section:
        """sum_l pi(e_l)(f) e~_l."""
        complex_valued = isinstance(f, ComplexPoly)
        entries: Dict[int, object] = {}
        for l in range(self.rank):
            if not self._anchor_cols[l]:
                continue
            df = self.derive_along(l, f)
            if df.is_zero():
                continue
            for d, g in enumerate(self.space.inverse[l]):
                if g:
                    term = df * g
                    entries[d] = entries[d] + term if d in entries else term
        return self._collect(entries, complex_valued)

    def pair(self, u: Section, v: Section):
        return self.space.pair(u, v)

    # -- bracket ---------------------------------------------------------

    def frame_bracket(self, a: int, b: int) -> Bracket:
        return self._brackets.get((a, b), {})

    def structure_tensor(self, a: int, b: int, c: int):
        """<[e_a, e_b], e_c>."""
        total = TrigPoly.zero(self.m)
        for d, value in self.frame_bracket(a, b).items():
            g = self.space.gram[d][c]
            if g:
                total = total + value * g
        return total

    def structure_form(self) -> FormField:
        """C_abc = <[e_a, e_b], e_c> as a 3-form; requires total skewness."""
        if self._structure is None:
            comps = {}
            for idx in itertools.permutations(range(self.rank), 3):
                value = self.structure_tensor(*idx)
                if value.is_zero():
                    continue
                comps[idx] = value
            for (a, b, c), value in comps.items():
                if comps.get((b, a, c), TrigPoly.zero(self.m)) != -value or \
                        comps.get((a, c, b), TrigPoly.zero(self.m)) != -value:
                    raise PreconditionError(
                        f"Frame structure functions are not totally skew at {(a, b, c)}")
            for a, b in itertools.product(range(self.rank), repeat=2):
                for c in range(self.rank):
                    if len({a, b, c}) < 3 and not self.structure_tensor(a, b, c).is_zero():
                        raise PreconditionError(
                            f"Frame structure functions are not totally skew at {(a, b, c)}")
            self._structure = FormField(self.m, self.rank, 3,
                                        {k: v for k, v in comps.items() if k[0] < k[1] < k[2]})
        return self._structure

    def dorfman(self, u: Section, v: Section) -> Section:
        """Dorfman bracket [u, v] of two sections."""
        complex_valued = any(isinstance(x, ComplexPoly) for x in itertools.chain(u, v))
        entries: Dict[int, object] = {}

        def put(d, term):
            entries[d] = entries[d] + term if d in entries else term

        nz_u = [(a, x) for a, x in enumerate(u) if not _is_zero(x)]
        nz_v = [(b, x) for b, x in enumerate(v) if not _is_zero(x)]
        for a, ua in nz_u:
            for b, vb in nz_v:
                bracket = self.frame_bracket(a, b)
                if not bracket:
                    continue
                coef = ua * vb
                for d, c in bracket.items():
                    put(d, coef * c)
        for a, ua in nz_u:
            if not self._anchor_cols[a]:
                continue
            for b, vb in nz_v:
                dv = self.derive_along(a, vb)
                if not dv.is_zero():
                    put(b, ua * dv)
        for b, vb in nz_v:
            if not self._anchor_cols[b]:
                continue
            for a, ua in nz_u:
                du = self.derive_along(b, ua)
                if not du.is_zero():
                    put(a, -(vb * du))
        for a, ua in nz_u:
            weight = None
            for b, vb in nz_v:
                g = self.space.gram[a][b]
                if g:
                    term = vb * g
                    weight = term if weight is None else weight + term
            if weight is None or _is_zero(weight):
                continue
            grad = self.pi_star_d(ua)
            for d, x in enumerate(grad):
                if not _is_zero(x):
                    put(d, weight * x)
        return self._collect({d: x for d, x in entries.items() if not _is_zero(x)}, complex_valued)

    # -- spanning set ----------------------------------------------------

    def spanning_sections(self) -> List[Tuple[str, Section]]:
        """Frame sections times each of {1, cos theta_i, sin theta_i}."""
        out = []
        for a in range(self.rank):
            for label, f in zip(multiplier_labels(self.m), multipliers(self.m)):
                out.append((f"{label}*e{a}", self.frame(a, f)))
        return out

    def decorated_tuples(self, arity: int) -> Iterable[Tuple[Tuple[str, Section], ...]]:
        """Frame tuples with a non-constant multiplier on at most one slot."""
        mults = list(zip(multiplier_labels(self.m), multipliers(self.m)))
        for idx in itertools.product(range(self.rank), repeat=arity):
            plain = tuple((f"e{a}", self.frame(a)) for a in idx)
            yield plain
            for slot in range(arity):
                for label, f in mults[1:]:
                    item = list(plain)
                    item[slot] = (f"{label}*e{idx[slot]}", self.frame(idx[slot], f))
                    yield tuple(item)

    def data_degree(self) -> int:
        return max((c.degree() for bracket in self._brackets.values() for c in bracket.values()), default=0)

    # -- axioms ----------------------------------------------------------

    def axioms_check(self) -> Verdict:
        """Evaluate C1-C5 on the spanning set; first failure per axiom is the witness."""
        verdict = Verdict("check-axioms", data={"model": self.name, "variant": self.variant})
        verdict.add("C1", *self._first_failure(self.decorated_tuples(3), self._jacobiator))
        verdict.add("C2", *self._first_failure(self.decorated_tuples(2), self._anchor_defect))
        verdict.add("C3", *self._first_failure(self._leibniz_cases(), self._leibniz_defect))
        verdict.add("C4", *self._first_failure(self.decorated_tuples(3), self._invariance_defect))
        verdict.add("C5", *self._first_failure(self._square_cases(), self._square_defect))
        verdict.finish()
        logger.info("Axioms for %s: %s in %.4f seconds", self.name,
                    "pass" if verdict.passed else "FAIL", verdict.elapsed)
        return verdict

    @staticmethod
    def _first_failure(cases, defect_fn) -> Tuple[bool, Optional[dict]]:
        for case in cases:
            defect = defect_fn(*[s for _, s in case])
            if not _defect_is_zero(defect):
                logger.debug("Witness %s", [label for label, _ in case])
                return False, {"sections": [label for label, _ in case], "defect": defect}
        return True, None

    def jacobiator(self, u: Section, v: Section, w: Section) -> Section:
        """[u, [v, w]] - [[u, v], w] - [v, [u, w]]."""
        return self._jacobiator(u, v, w)

    def _jacobiator(self, u, v, w):
        lhs = self.dorfman(u, self.dorfman(v, w))
        rhs1 = self.dorfman(self.dorfman(u, v), w)
        rhs2 = self.dorfman(v, self.dorfman(u, w))
        return tuple(x - y - z for x, y, z in zip(lhs, rhs1, rhs2))

    def _anchor_defect(self, u, v):
        lhs = self.anchor_vector(self.dorfman(u, v))
        rhs = vector_field_bracket(self.anchor_vector(u), self.anchor_vector(v))
        return tuple(x - y for x, y in zip(lhs, rhs))

    def _leibniz_cases(self):
        for case in self.decorated_tuples(2):
            for label, f in zip(multiplier_labels(self.m)[1:], multipliers(self.m)[1:]):
                yield case + ((label, f),)
            if self.m == 0:
                yield case + (("1", TrigPoly.one(0)),)

    def _leibniz_defect(self, u, v, f):
        lhs = self.dorfman(u, tuple(f * x for x in v))
        rhs = self.dorfman(u, v)
        df = self.anchor(u, f)
        return tuple(x - f * y - df * z for x, y, z in zip(lhs, rhs, v))

    def _invariance_defect(self, u, v, w):
        lhs = self.anchor(u, self.pair(v, w))
        return lhs - self.pair(self.dorfman(u, v), w) - self.pair(v, self.dorfman(u, w))

    def _square_cases(self):
        spanning = self.spanning_sections()
        for item in spanning:
            yield (item,)
        for a, b in itertools.combinations(range(self.rank), 2):
            for label, f in zip(multiplier_labels(self.m), multipliers(self.m)):
                u = tuple(x + y for x, y in zip(self.frame(a, f), self.frame(b)))
                yield ((f"{label}*e{a}+e{b}", u),)

    def _square_defect(self, u):
        lhs = self.dorfman(u, u)
        rhs = self.pi_star_d(self.pair(u, u))
        return tuple(2 * x - y for x, y in zip(lhs, rhs))

    def polarized_c5_defect(self, u: Section, v: Section, w: Section):
        """<[u,v] + [v,u], w> - pi(w)<u,v>."""
        sym = tuple(x + y for x, y in zip(self.dorfman(u, v), self.dorfman(v, u)))
        return self.pair(sym, w) - self.anchor(w, self.pair(u, v))

    # -- isotropic frames and spinors -------------------------------------

    def kernel_basis(self) -> List[List[Fraction]]:
        """Constant frame vectors spanning ker pi."""
        if self.m == 0:
            return [[Fraction(int(i == a)) for i in range(self.rank)] for a in range(self.rank)]
        return nullspace(self.anchor_matrix, self.rank)

    def spinor_planes(self) -> Tuple[List[List[Fraction]], List[List[Fraction]]]:
        """Isotropic (P, Q) with 2<p_a, q_b> = delta_ab, p_a in ker pi."""
        if self.planes is not None:
            return self.planes
        return self._default_planes()

    def _default_planes(self):
        return rational_isotropic_pair(self.space)

    def isotropic_frame(self) -> Tuple[List[List[Fraction]], List[List[Fraction]]]:
        """(p_a, q_a) with <p_a, q_b> = delta_ab; raises if a condition fails."""
        p, q = self.spinor_planes()
        p = [[2 * c for c in v] for v in p]
        report = self.isotropic_frame_check(p, q)
        if not report.passed:
            names = ", ".join(c.name for c in report.failures)
            raise PreconditionError(f"Isotropic frame construction failed: {names}")
        return p, q

    def isotropic_frame_check(self, p, q) -> Verdict:
        verdict = Verdict("isotropic-frame", data={"model": self.name})
        n = self.rank // 2
        pair = self.space.pair_const
        verdict.add("rank", len(p) == n and len(q) == n)
        verdict.add("P isotropic", all(pair(x, y) == 0 for x in p for y in p))
        verdict.add("Q isotropic", all(pair(x, y) == 0 for x in q for y in q))
        verdict.add("duality", all(pair(p[a], q[b]) == (1 if a == b else 0)
                                   for a in range(len(p)) for b in range(len(q))))
        anchor_p = [self.anchor_vector(self.section(v)) for v in p]
        verdict.add("P in ker pi", all(all(_is_zero(x) for x in vec) for vec in anchor_p))
        anchor_q = [self.anchor_vector(self.section(v)) for v in q]
        clash = next(((a, b) for a in range(len(q)) for b in range(a + 1, len(q))
                      if not all(_is_zero(x) for x in vector_field_bracket(anchor_q[a], anchor_q[b]))), None)
        verdict.add("commuting anchors", clash is None, None if clash is None else {"frame": list(clash)})
        ok = True
        for k in self.kernel_basis():
            for f in multipliers(self.m):
                sigma = tuple(f * c for c in k)
                total = TrigPoly.zero(self.m)
                for a in range(len(p)):
                    total = total + self.anchor(self.section(q[a]), self.pair(sigma, self.section(p[a])))
                if not total.is_zero():
                    ok = False
        verdict.add("sum identity on ker pi", ok)
        return verdict.finish()

    def spinor_module(self) -> SpinorModule:
        if self._module is None:
            p, q = self.spinor_planes()
            self._module = SpinorModule(self.space, p, q, self.m)
        return self._module

    def describe(self) -> dict:
        return {"name": self.name, "variant": self.variant, "rank": self.rank,
                "torus_dim": self.m, "signature": list(self.space.signature)}


def multiplier_labels(m: int) -> List[str]:
    labels = ["1"]
    for i in range(m):
        labels.extend([f"cos(t{i + 1})", f"sin(t{i + 1})"])
    return labels


def _defect_is_zero(defect) -> bool:
    if isinstance(defect, tuple):
        return all(_is_zero(x) for x in defect)
    return _is_zero(defect)


def vector_field_bracket(x: Sequence, y: Sequence) -> Tuple:
    """Lie bracket of coordinate vector fields."""
    m = len(x)
    out = []
    for i in range(m):
        total = x[i] * 0
        for j in range(m):
            if not _is_zero(x[j]):
                total = total + x[j] * y[i].derive(j)
            if not _is_zero(y[j]):
                total = total - y[j] * x[i].derive(j)
        out.append(total)
    return tuple(out)


def brackets_from_structure(space: QuadSpace, structure: FormField) -> Dict[Tuple[int, int], Bracket]:
    """[e_a, e_b] = sum C_abc G^{cd} e_d for a totally skew C."""
    out: Dict[Tuple[int, int], Bracket] = {}
    n = space.rank
    for key, value in structure.comps.items():
        for perm in itertools.permutations(range(3)):
            a, b, c = (key[p] for p in perm)
            sign = _sign3(perm)
            for d in range(n):
                g = space.inverse[c][d]
                if not g:
                    continue
                term = value * (g * sign)
                bracket = out.setdefault((a, b), {})
                bracket[d] = bracket[d] + term if d in bracket else term
    return out


def _sign3(perm) -> int:
    return {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1}.get(tuple(perm), -1)


# ---------------------------------------------------------------------------
# quadratic Lie algebras


class QuadLieModel(CourantModel):
    """Quadratic Lie algebra over a point: pi = 0, Dorfman = Lie bracket."""

    variant = "quadratic_lie"

    def __init__(self, gram: Sequence[Sequence], structure_constants: Dict[Tuple[int, int], Sequence],
                 name: str = ""):
        space = QuadSpace(gram)
        n = space.rank
        constants: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
        for (i, j), vector in structure_constants.items():
            if i == j:
                raise ModelValidationError(f"Bracket [e{i}, e{i}] must vanish")
            if len(vector) != n:
                raise DimensionMismatchError(f"Bracket [e{i}, e{j}] needs {n} components")
            values = {k: to_rat(c) for k, c in enumerate(vector) if to_rat(c)}
            if (j, i) in constants and constants[(j, i)] != {k: -c for k, c in values.items()}:
                raise ModelValidationError(f"Brackets [e{i}, e{j}] and [e{j}, e{i}] are not opposite")
            constants[(i, j)] = values
            constants[(j, i)] = {k: -c for k, c in values.items()}
        self.constants = constants
        brackets = {key: {k: TrigPoly.constant(0, c) for k, c in value.items()}
                    for key, value in constants.items()}
        super().__init__(0, space, [], brackets, name)

    def constant(self, i: int, j: int, k: int) -> Fraction:
        return self.constants.get((i, j), {}).get(k, Fraction(0))

    def lie_bracket(self, u: Sequence, v: Sequence) -> List[Fraction]:
        out = [Fraction(0)] * self.rank
        for (i, j), value in self.constants.items():
            if u[i] and v[j]:
                for k, c in value.items():
                    out[k] += u[i] * v[j] * c
        return out

    def jacobi_holds(self) -> bool:
        n = self.rank
        for i, j, k in itertools.combinations(range(n), 3):
            e = lambda a: [Fraction(int(a == x)) for x in range(n)]  # noqa: E731
            total = [Fraction(0)] * n
            for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                inner = self.lie_bracket(e(b), e(c))
                outer = self.lie_bracket(e(a), inner)
                total = [x + y for x, y in zip(total, outer)]
            if any(total):
                return False
        return True

    def is_invariant(self) -> bool:
        n = self.rank
        for i, j, k in itertools.product(range(n), repeat=3):
            e = lambda a: [Fraction(int(a == x)) for x in range(n)]  # noqa: E731
            lhs = self.space.pair_const(self.lie_bracket(e(i), e(j)), e(k))
            rhs = self.space.pair_const(e(j), self.lie_bracket(e(i), e(k)))
            if lhs + rhs != 0:
                return False
        return True

    def cartan_form(self) -> FormField:
        """C(u, v, w) = <[u, v], w>."""
        return self.structure_form()


def lie_double(dimension: int, structure_constants: Dict[Tuple[int, int], Sequence], name: str = "") -> QuadLieModel:
    """h x| h* with <x + xi, y + eta> = 1/2 (xi(y) + eta(x))."""
    d = dimension
    half = Fraction(1, 2)
    gram = [[Fraction(0)] * (2 * d) for _ in range(2 * d)]
    for i in range(d):
        gram[i][d + i] = gram[d + i][i] = half
    brackets: Dict[Tuple[int, int], List[Fraction]] = {}
    c = {(i, j): [to_rat(x) for x in vec] for (i, j), vec in structure_constants.items()}
    for (i, j), vec in list(c.items()):
        c[(j, i)] = [-x for x in vec]
    for (i, j), vec in c.items():
        if i < j:
            brackets[(i, j)] = list(vec) + [Fraction(0)] * d
    for i in range(d):
        for j in range(d):
            # [x_i, xi_j] = -sum_k c^j_ik xi_k
            vec = [Fraction(0)] * (2 * d)
            for k in range(d):
                vec[d + k] = -c.get((i, k), [Fraction(0)] * d)[j]
            if any(vec):
                brackets[(i, d + j)] = vec
    return QuadLieModel(gram, brackets, name or "lie-double")


# ---------------------------------------------------------------------------
# exact Courant algebroids


class ExactModel(CourantModel):
    """TT* over T^m twisted by a 3-form H; frame (d_1..d_m, dtheta_1..dtheta_m)."""

    variant = "exact"

    def __init__(self, m: int, H: Optional[FormField] = None, name: str = "", require_closed: bool = True):
        H = H if H is not None else FormField.zero(m, m, 3)
        if H.rank != m or H.degree != 3:
            raise DimensionMismatchError("H must be a 3-form on the coordinate coframe")
        self.H = H
        if require_closed and not self.dH().is_zero():
            raise ModelValidationError("The twisting 3-form H is not closed")
        half = Fraction(1, 2)
        gram = [[Fraction(0)] * (2 * m) for _ in range(2 * m)]
        for i in range(m):
            gram[i][m + i] = gram[m + i][i] = half
        space = QuadSpace(gram)
        structure = FormField(m, 2 * m, 3, {key: value * half for key, value in H.comps.items()})
        anchor = [[Fraction(int(a == i)) for a in range(2 * m)] for i in range(m)]
        super().__init__(m, space, anchor, brackets_from_structure(space, structure), name)

    def dH(self) -> FormField:
        return exterior_derivative(self.H)

    def split(self, u: Section) -> Tuple[Tuple, Tuple]:
        return tuple(u[:self.m]), tuple(u[self.m:])

    def twisted_bracket(self, u: Section, v: Section) -> Section:
        """[X + xi, Y + eta] = [X, Y] + L_X eta - i_Y d xi + H(X, Y, .)."""
        m = self.m
        X, xi = self.split(u)
        Y, eta = self.split(v)
        vector = vector_field_bracket(X, Y)
        covector = []
        for k in range(m):
            total = X[k] * 0
            for j in range(m):
                total = total + X[j] * eta[k].derive(j) + eta[j] * X[j].derive(k)
                total = total - Y[j] * (xi[k].derive(j) - xi[j].derive(k))
            for (a, b, c), h in self.H.comps.items():
                for perm in itertools.permutations(range(3)):
                    idx = ((a, b, c)[perm[0]], (a, b, c)[perm[1]], (a, b, c)[perm[2]])
                    if idx[2] != k:
                        continue
                    term = X[idx[0]] * Y[idx[1]] * h
                    total = total + term if _sign3(perm) > 0 else total - term
            covector.append(total)
        return tuple(vector) + tuple(covector)

    def _default_planes(self):
        m = self.m
        p = [[Fraction(int(c == m + a)) for c in range(2 * m)] for a in range(m)]
        q = [[Fraction(int(c == a)) for c in range(2 * m)] for a in range(m)]
        return p, q

    def vector(self, components: Sequence) -> Section:
        return self.section(list(components) + [0] * self.m)

    def covector(self, components: Sequence) -> Section:
        return self.section([0] * self.m + list(components))

    def b_transform(self, B: FormField) -> EndoField:
        """e^B: X + xi -> X + xi + i_X B, for a closed 2-form B."""
        if B.degree != 2 or B.rank != self.m:
            raise DimensionMismatchError("B must be a 2-form on the coordinate coframe")
        if not exterior_derivative(B).is_zero():
            raise PreconditionError("B-field transforms are bracket automorphisms only for closed B")
        m = self.m
        matrix = [[TrigPoly.one(m) if i == j else TrigPoly.zero(m) for j in range(2 * m)] for i in range(2 * m)]
        for (i, j), value in B.comps.items():
            # i_{d_i} B has dtheta_j component B_ij, i_{d_j} B has dtheta_i component -B_ij
            matrix[m + j][i] = matrix[m + j][i] + value
            matrix[m + i][j] = matrix[m + i][j] - value
        return EndoField(m, matrix)


# ---------------------------------------------------------------------------
# dissections


class DissectionModel(CourantModel):
    """Regular model E = F* + G + F over T^f from the data (nabla, R, H).

    Frame order: (d_1..d_f | r_1..r_k | dtheta_1..dtheta_f). The bracket is
    read off the connection nabla^E and its torsion.
    """

    variant = "dissection"

    def __init__(self, f: int, lie: QuadLieModel, nabla: Optional[Sequence[Sequence[Sequence]]] = None,
                 R: Optional[Dict[Tuple[int, int], Sequence]] = None, curvature_H: Optional[FormField] = None,
                 frame_connection: Optional[Dict[Tuple[int, int, int], object]] = None,
                 name: str = "", validate: bool = True):
        self.f = f
        self.lie = lie
        self.k = lie.rank
        k = self.k
        zero = TrigPoly.zero(f)
        self.nabla = [[[_lift(f, c) for c in row] for row in matrix] for matrix in (nabla or [])] \
            or [[[zero] * k for _ in range(k)] for _ in range(f)]
        if len(self.nabla) != f or any(len(mat) != k or any(len(row) != k for row in mat) for mat in self.nabla):
            raise DimensionMismatchError(f"nabla needs {f} matrices of size {k}")
        self.R: Dict[Tuple[int, int], Tuple] = {}
        for (i, j), vector in (R or {}).items():
            if len(vector) != k:
                raise DimensionMismatchError(f"R({i},{j}) needs {k} components")
            value = tuple(_lift(f, c) for c in vector)
            self.R[(i, j)] = value
            self.R[(j, i)] = tuple(-c for c in value)
        self.curvature_H = curvature_H if curvature_H is not None else FormField.zero(f, f, 3)
        self.frame_connection = {key: _lift(f, c) for key, c in (frame_connection or {}).items()}
        for (i, j, l), value in self.frame_connection.items():
            if self.frame_connection.get((j, i, l), zero) != value:
                raise ModelValidationError("The frame connection must be torsion-free")
        for i, matrix in enumerate(self.nabla):
            for a in range(k):
                for b in range(a, k):
                    low = sum((matrix[l][a] * lie.space.gram[l][b] + matrix[l][b] * lie.space.gram[l][a]
                               for l in range(k)), zero)
                    if not low.is_zero():
                        raise ModelValidationError(
                            f"nabla along d_{i + 1} does not preserve the scalar product of G")
        n = 2 * f + k
        half = Fraction(1, 2)
        gram = [[Fraction(0)] * n for _ in range(n)]
        for i in range(f):
            gram[i][f + k + i] = gram[f + k + i][i] = half
        for a in range(k):
            for b in range(k):
                gram[f + a][f + b] = lie.space.gram[a][b]
        space = QuadSpace(gram)
        self._eta = self._nabla_e()
        self._torsion = self._nabla_e_torsion(space)
        structure = self._reconstruct(space)
        anchor = [[Fraction(int(a == i)) for a in range(n)] for i in range(f)]
        super().__init__(f, space, anchor, brackets_from_structure(space, structure), name)
        self._structure = structure
        if validate:
            report = self.axioms_check()
            if not report.passed:
                names = ", ".join(c.name for c in report.failures)
                raise ModelValidationError(f"Dissection data do not define a Courant algebroid ({names} fail)")

    # frame indices
    def d_index(self, i: int) -> int:
        return i

    def g_index(self, r: int) -> int:
        return self.f + r

    def c_index(self, i: int) -> int:
        return self.f + self.k + i

    def _pair_lie(self, x: Sequence, r: int):
        total = TrigPoly.zero(self.f)
        for l, c in enumerate(x):
            g = self.lie.space.gram[l][r]
            if g:
                total = total + c * g
        return total

    def _nabla_e(self) -> Dict[Tuple[int, int, int], TrigPoly]:
        """eta_abc = <nabla^E_{e_a} e_b, e_c>, skew in (b, c)."""
        f, k = self.f, self.k
        eta: Dict[Tuple[int, int, int], TrigPoly] = {}

        def put(a, b, c, value):
            if value.is_zero():
                return
            eta[(a, b, c)] = eta.get((a, b, c), TrigPoly.zero(f)) + value
            eta[(a, c, b)] = eta.get((a, c, b), TrigPoly.zero(f)) - value

        sixth = Fraction(1, 6)
        for key, value in self.curvature_H.comps.items():
            for perm in itertools.permutations(range(3)):
                i, j, l = (key[p] for p in perm)
                if j < l:
                    put(i, j, l, value * (-sixth * _sign3(perm)))
        half = Fraction(1, 2)
        for (i, j, l), gamma in self.frame_connection.items():
            # nabla_{d_i} d_j = Gamma_ij^l d_l, nabla_{d_i} dtheta_l = -Gamma_ij^l dtheta_j
            put(self.d_index(i), self.d_index(j), self.c_index(l), gamma * half)
        for i in range(f):
            for j in range(k):
                for r in range(j + 1, k):
                    value = TrigPoly.zero(f)
                    for l in range(k):
                        value = value + self.nabla[i][l][j] * self.lie.space.gram[l][r]
                    put(self.d_index(i), self.g_index(j), self.g_index(r), value)
        two_thirds = Fraction(2, 3)
        cartan = self.lie.structure_form()
        for key, value in cartan.comps.items():
            for perm in itertools.permutations(range(3)):
                a, b, c = (key[p] for p in perm)
                if b < c:
                    put(self.g_index(a), self.g_index(b), self.g_index(c),
                        _lift(f, value.constant_term()) * (two_thirds * _sign3(perm)))
        return eta

    def _nabla_e_torsion(self, space: QuadSpace) -> FormField:
        f, k = self.f, self.k
        n = space.rank
        comps: Dict[Tuple[int, ...], TrigPoly] = {}
        for key, value in self.curvature_H.comps.items():
            comps[tuple(self.d_index(i) for i in key)] = -value
        for (i, j), vector in self.R.items():
            if i < j:
                for r in range(k):
                    value = self._pair_lie(vector, r)
                    if not value.is_zero():
                        comps[(self.d_index(i), self.d_index(j), self.g_index(r))] = -value
        for key, value in self.lie.structure_form().comps.items():
            comps[tuple(self.g_index(a) for a in key)] = _lift(f, value.constant_term())
        return FormField(f, n, 3, comps)

    def _reconstruct(self, space: QuadSpace) -> FormField:
        n = space.rank
        f = self.f
        eta = self._eta
        zero = TrigPoly.zero(f)
        comps = {}
        for a, b, c in itertools.permutations(range(n), 3):
            value = (eta.get((a, b, c), zero) - eta.get((b, a, c), zero) + eta.get((c, a, b), zero)
                     - self._torsion.component((a, b, c)))
            if not value.is_zero():
                comps[(a, b, c)] = value
        for (a, b, c), value in comps.items():
            if comps.get((b, a, c), zero) != -value or comps.get((a, c, b), zero) != -value:
                raise ModelValidationError(
                    f"Dissection data give a bracket that is not skew at {(a, b, c)}; "
                    "nabla must preserve the scalar product of G")
        return FormField(f, n, 3, {key: v for key, v in comps.items() if key[0] < key[1] < key[2]})

    def nabla_e_eta(self) -> Dict[Tuple[int, int, int], TrigPoly]:
        return dict(self._eta)

    def nabla_e_torsion(self) -> FormField:
        return self._torsion

    def _default_planes(self):
        f, k = self.f, self.k
        n = self.rank
        p_lie, q_lie = rational_isotropic_pair(self.lie.space)
        p = [[Fraction(int(c == self.c_index(i))) for c in range(n)] for i in range(f)]
        q = [[Fraction(int(c == self.d_index(i))) for c in range(n)] for i in range(f)]
        for vec in p_lie:
            p.append([Fraction(0)] * f + list(vec) + [Fraction(0)] * f)
        for vec in q_lie:
            q.append([Fraction(0)] * f + list(vec) + [Fraction(0)] * f)
        return p, q

    def lie_part(self, u: Section) -> Tuple:
        return tuple(u[self.f:self.f + self.k])
