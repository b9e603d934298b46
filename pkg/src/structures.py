"""
Generalized metrics and (hyper)complex / Hermitian structures.

Structures are endomorphism fields in the model frame. Validation is exact;
integrability is decided from the Nijenhuis tensor and, for Hermitian pairs,
from bracket closure of L n (E+-)_C on the spanning set.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from src.courant import CourantModel, ExactModel, multiplier_labels
from src.linalg import (EndoField, FormField, QuadSpace, Section, _is_zero, complex_nullspace, complex_rank,
                        constant_endo, inverse, nullspace)
from src.ring import ComplexPoly, TrigPoly, grid_points, multipliers
from src.utils.errors import CourantKitError, DimensionMismatchError, PreconditionError
from src.utils.reports import Verdict

logger = logging.getLogger(__name__)


def _first_mismatch(a: EndoField, b: EndoField) -> Optional[dict]:
    for i in range(a.rank):
        for j in range(a.rank):
            if a.matrix[i][j] != b.matrix[i][j]:
                return {"entry": [i, j], "lhs": a.matrix[i][j], "rhs": b.matrix[i][j]}
    return None


def _skew_mismatch(endo: EndoField, space, symmetric: bool = False) -> Optional[dict]:
    low = endo.lowered(space)
    for k in range(endo.rank):
        for l in range(k, endo.rank):
            total = low[k][l] - low[l][k] if symmetric else low[k][l] + low[l][k]
            if not _is_zero(total):
                return {"entry": [k, l], "value": total}
    return None


@dataclass
class GenMetric:
    """Generalized metric as the involution G^end."""
    endo: EndoField
    name: str = "G"

    def projector(self, sign: int) -> EndoField:
        identity = EndoField.identity(self.endo.m, self.endo.rank)
        half = Fraction(1, 2)
        return (identity + self.endo).scale(half) if sign > 0 else (identity - self.endo).scale(half)

    def project(self, u: Section, sign: int) -> Section:
        return self.projector(sign).apply(u)

    def eigenbasis(self, sign: int) -> List[List[Fraction]]:
        """Constant basis of E+ (sign = 1) or E- (sign = -1)."""
        matrix = self.endo.constant_matrix()
        n = len(matrix)
        shifted = [[matrix[i][j] - (sign if i == j else 0) for j in range(n)] for i in range(n)]
        return nullspace(shifted, n)

    def restricted_gram(self, space, sign: int) -> List[List[Fraction]]:
        basis = self.eigenbasis(sign)
        return [[space.pair_const(u, v) for v in basis] for u in basis]

    def validate(self, space) -> Verdict:
        verdict = Verdict("validate-metric", data={"structure": self.name})
        n = self.endo.rank
        identity = EndoField.identity(self.endo.m, n)
        verdict.add("involution", (self.endo @ self.endo) == identity,
                    _first_mismatch(self.endo @ self.endo, identity))
        witness = _skew_mismatch(self.endo, space, symmetric=True)
        verdict.add("self-adjoint", witness is None, witness)
        if self.endo.is_constant() and verdict.passed:
            plus = self.restricted_gram(space, 1)
            minus = self.restricted_gram(space, -1)
            try:
                sig_plus = QuadSpace(plus).signature if plus else (0, 0)
                sig_minus = QuadSpace(minus).signature if minus else (0, 0)
                verdict.add("nondegenerate on E+", True)
                verdict.data["signature_plus"] = list(sig_plus)
                verdict.data["signature_minus"] = list(sig_minus)
            except CourantKitError:
                verdict.add("nondegenerate on E+", False)
        return verdict.finish()


@dataclass
class GenComplex:
    """Generalized almost complex structure."""
    endo: EndoField
    name: str = "J"

    def validate(self, space) -> Verdict:
        verdict = Verdict("validate-complex", data={"structure": self.name})
        n = self.endo.rank
        minus_identity = -EndoField.identity(self.endo.m, n)
        square = self.endo @ self.endo
        verdict.add("square is -Id", square == minus_identity, _first_mismatch(square, minus_identity))
        witness = _skew_mismatch(self.endo, space)
        verdict.add("orthogonal", witness is None, witness)
        return verdict.finish()

    def apply(self, u: Section) -> Section:
        return self.endo.apply(u)


@dataclass
class HyperTriple:
    j1: GenComplex
    j2: GenComplex
    j3: GenComplex

    @classmethod
    def from_pair(cls, j1: GenComplex, j2: GenComplex) -> "HyperTriple":
        return cls(j1, j2, GenComplex(j1.endo @ j2.endo, name="J3"))

    def structures(self) -> List[GenComplex]:
        return [self.j1, self.j2, self.j3]

    def validate(self, space) -> Verdict:
        verdict = Verdict("validate-hyper")
        for index, j in enumerate(self.structures(), start=1):
            verdict.extend(j.validate(space), prefix=f"J{index}: ")
        zero = EndoField.zero(self.j1.endo.m, self.j1.endo.rank)
        for (a, ja), (b, jb) in itertools.combinations(enumerate(self.structures(), start=1), 2):
            anti = ja.endo.anticommutator(jb.endo)
            verdict.add(f"J{a}, J{b} anticommute", anti == zero, _first_mismatch(anti, zero))
        product = self.j1.endo @ self.j2.endo
        verdict.add("J3 = J1 J2", product == self.j3.endo, _first_mismatch(product, self.j3.endo))
        return verdict.finish()


@dataclass
class HermitianPair:
    metric: GenMetric
    complex: GenComplex

    @property
    def second(self) -> GenComplex:
        """J2 = G^end J."""
        return GenComplex(self.metric.endo @ self.complex.endo, name=f"G{self.complex.name}")

    def validate(self, space) -> Verdict:
        verdict = Verdict("validate-hermitian")
        verdict.extend(self.metric.validate(space), prefix="G: ")
        verdict.extend(self.complex.validate(space), prefix="J: ")
        commutator = self.metric.endo.commutator(self.complex.endo)
        zero = EndoField.zero(commutator.m, commutator.rank)
        verdict.add("G(Ju, Jv) = G(u, v)", commutator == zero, _first_mismatch(commutator, zero))
        verdict.extend(self.second.validate(space), prefix="J2: ")
        return verdict.finish()


@dataclass
class HyperHermitian:
    metric: GenMetric
    triple: HyperTriple

    def pairs(self) -> List[HermitianPair]:
        return [HermitianPair(self.metric, j) for j in self.triple.structures()]

    def validate(self, space) -> Verdict:
        verdict = Verdict("validate-hyper-hermitian")
        verdict.extend(self.triple.validate(space))
        for index, pair in enumerate(self.pairs(), start=1):
            verdict.extend(pair.validate(space), prefix=f"(G, J{index}) ")
        return verdict.finish()


Structure = Union[GenMetric, GenComplex, HyperTriple, HermitianPair, HyperHermitian]


def validate(structure: Structure, space) -> Verdict:
    return structure.validate(space)


# ---------------------------------------------------------------------------
# constructors on the exact model


def metric_from_g(model: ExactModel, g: Sequence[Sequence], name: str = "G") -> GenMetric:
    """G^end = [[0, g^-1], [g, 0]] for a constant (pseudo-)Riemannian g."""
    m = model.m
    g_inv = inverse(g)
    matrix = [[Fraction(0)] * (2 * m) for _ in range(2 * m)]
    for i in range(m):
        for j in range(m):
            matrix[m + i][j] = Fraction(g[i][j])
            matrix[i][m + j] = g_inv[i][j]
    return GenMetric(constant_endo(m, matrix), name)


def complex_lift(model: ExactModel, J: Sequence[Sequence], name: str = "J") -> GenComplex:
    """[[J, 0], [0, -J*]]; entries may be TrigPolys."""
    m = model.m
    matrix = [[TrigPoly.zero(m) for _ in range(2 * m)] for _ in range(2 * m)]
    for i in range(m):
        for j in range(m):
            value = J[i][j] if isinstance(J[i][j], TrigPoly) else TrigPoly.constant(m, J[i][j])
            matrix[i][j] = value
            matrix[m + j][m + i] = -value
    return GenComplex(EndoField(m, matrix), name)


def symplectic_lift(model: ExactModel, omega: Sequence[Sequence], name: str = "J_omega") -> GenComplex:
    """[[0, -W^-1], [W, 0]] with W X = i_X omega, omega constant."""
    m = model.m
    W = [[Fraction(omega[j][i]) for j in range(m)] for i in range(m)]
    W_inv = inverse(W)
    matrix = [[Fraction(0)] * (2 * m) for _ in range(2 * m)]
    for i in range(m):
        for j in range(m):
            matrix[m + i][j] = W[i][j]
            matrix[i][m + j] = -W_inv[i][j]
    return GenComplex(constant_endo(m, matrix), name)


def transport(endo: EndoField, transform: EndoField, transform_inverse: EndoField) -> EndoField:
    """T A T^-1."""
    return transform @ endo @ transform_inverse


def b_transform_structure(model: ExactModel, B: FormField, structure: Structure) -> Structure:
    forward = model.b_transform(B)
    backward = model.b_transform(B.scale(Fraction(-1)))
    if isinstance(structure, GenMetric):
        return GenMetric(transport(structure.endo, forward, backward), structure.name)
    if isinstance(structure, GenComplex):
        return GenComplex(transport(structure.endo, forward, backward), structure.name)
    if isinstance(structure, HermitianPair):
        return HermitianPair(b_transform_structure(model, B, structure.metric),
                             b_transform_structure(model, B, structure.complex))
    if isinstance(structure, HyperTriple):
        return HyperTriple(*(b_transform_structure(model, B, j) for j in structure.structures()))
    if isinstance(structure, HyperHermitian):
        return HyperHermitian(b_transform_structure(model, B, structure.metric),
                              b_transform_structure(model, B, structure.triple))
    raise PreconditionError(f"Cannot transform {type(structure).__name__}")


# ---------------------------------------------------------------------------
# Nijenhuis tensor


def nijenhuis_vector(model: CourantModel, J: GenComplex, u: Section, v: Section) -> Section:
    """N(u, v) = [Ju, Jv] - [u, v] - J([Ju, v] + [u, Jv])."""
    ju, jv = J.apply(u), J.apply(v)
    first = model.dorfman(ju, jv)
    second = model.dorfman(u, v)
    mixed = tuple(x + y for x, y in zip(model.dorfman(ju, v), model.dorfman(u, jv)))
    j_mixed = J.apply(mixed)
    return tuple(a - b - c for a, b, c in zip(first, second, j_mixed))


def nijenhuis(model: CourantModel, J: GenComplex, workers: int = 1) -> FormField:
    """N(u, v, w) = <N(u, v), w> on the frame, checked totally skew."""
    if J.endo.rank != model.rank:
        raise DimensionMismatchError("Structure and model have different rank")
    n = model.rank
    pairs = [(a, b) for a in range(n) for b in range(n)]

    def lowered(pair):
        a, b = pair
        vec = nijenhuis_vector(model, J, model.frame(a), model.frame(b))
        return pair, [model.space.pair(vec, model.frame(c)) for c in range(n)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = dict(executor.map(lowered, pairs))
    else:
        results = dict(map(lowered, pairs))
    comps = {}
    for a, b, c in itertools.product(range(n), repeat=3):
        value = results[(a, b)][c]
        if len({a, b, c}) < 3:
            if not _is_zero(value):
                raise PreconditionError(f"Nijenhuis tensor is not totally skew at {(a, b, c)}")
            continue
        if value != -results[(b, a)][c] or value != -results[(a, c)][b]:
            raise PreconditionError(f"Nijenhuis tensor is not totally skew at {(a, b, c)}")
        if a < b < c:
            comps[(a, b, c)] = value
    return FormField(model.m, n, 3, comps)


def is_integrable(model: CourantModel, J: GenComplex, workers: int = 1) -> bool:
    return nijenhuis(model, J, workers).is_zero()


def nijenhuis_identities(model: CourantModel, J: GenComplex, N: Optional[FormField] = None) -> Verdict:
    """N(Ju, v) = -J N(u, v) and N in Lambda^3_J."""
    verdict = Verdict("nijenhuis-identities", data={"structure": J.name})
    n = model.rank
    ok, witness = True, None
    for a, b in itertools.product(range(n), repeat=2):
        u, v = model.frame(a), model.frame(b)
        lhs = nijenhuis_vector(model, J, J.apply(u), v)
        rhs = J.apply(nijenhuis_vector(model, J, u, v))
        if any(not _is_zero(x + y) for x, y in zip(lhs, rhs)):
            ok, witness = False, {"frame": [a, b]}
            break
    verdict.add("N(Ju, v) = -J N(u, v)", ok, witness)
    N = N if N is not None else nijenhuis(model, J)
    ok, witness = True, None
    for a, b, c in itertools.combinations(range(n), 3):
        u, v, w = model.frame(a), model.frame(b), model.frame(c)
        values = [N.evaluate(J.apply(u), v, w), N.evaluate(u, J.apply(v), w), N.evaluate(u, v, J.apply(w))]
        if values[0] != values[1] or values[1] != values[2]:
            ok, witness = False, {"frame": [a, b, c]}
            break
    verdict.add("N in Lambda^3_J", ok, witness)
    return verdict.finish()


# ---------------------------------------------------------------------------
# eigenbundles and bracket closure


def _times_i(u: Section, m: int) -> Section:
    unit = ComplexPoly.i(m)
    return tuple(unit * x for x in u)


def _as_complex_section(u: Section) -> Section:
    return tuple(x if isinstance(x, ComplexPoly) else ComplexPoly(x) for x in u)


def _complex_values(u: Section, point) -> List[Tuple[Fraction, Fraction]]:
    return [x.evaluate(point) if isinstance(x, ComplexPoly) else (x.evaluate(point), Fraction(0)) for x in u]


def one_zero_bundle(model: CourantModel, J: GenComplex) -> List[Section]:
    """Basis of the +i eigenbundle L of J over complexified TrigPolys."""
    n = model.rank
    m = model.m
    half = n // 2
    if J.endo.is_constant():
        matrix = J.endo.constant_matrix()
        rows = [[(matrix[i][j], Fraction(-1) if i == j else Fraction(0)) for j in range(n)] for i in range(n)]
        basis = complex_nullspace(rows, n)
        return [tuple(ComplexPoly(TrigPoly.constant(m, re), TrigPoly.constant(m, im)) for re, im in vec)
                for vec in basis]
    candidates = []
    for a in range(n):
        e = _as_complex_section(model.frame(a))
        je = J.apply(e)
        candidates.append(tuple(x - y for x, y in zip(e, _times_i(je, m))))
    origin = tuple([0] * m)
    chosen: List[int] = []
    for a in range(n):
        trial = chosen + [a]
        rows = [list(col) for col in zip(*[_complex_values(candidates[c], origin) for c in trial])]
        if complex_rank(rows, len(trial)) == len(trial):
            chosen = trial
        if len(chosen) == half:
            break
    for point in grid_points(m):
        rows = [list(col) for col in zip(*[_complex_values(candidates[c], point) for c in chosen])]
        if complex_rank(rows, len(chosen)) != half:
            raise PreconditionError("The (1,0)-bundle has no global frame of this shape over the torus")
    return [candidates[c] for c in chosen]


def _in_eigenbundle(model: CourantModel, J: GenComplex, w: Section) -> bool:
    jw = J.apply(w)
    iw = _times_i(w, model.m)
    return all(_is_zero(x - y) for x, y in zip(jw, iw))


def _decorated(model: CourantModel, sections: List[Tuple[str, Section]], arity: int):
    mults = list(zip(multiplier_labels(model.m), multipliers(model.m)))
    for combo in itertools.product(sections, repeat=arity):
        yield combo
        for slot in range(arity):
            for label, f in mults[1:]:
                item = list(combo)
                item[slot] = (f"{label}*{combo[slot][0]}", tuple(f * x for x in combo[slot][1]))
                yield tuple(item)


def intersection_spanning(model: CourantModel, pair: HermitianPair, sign: int) -> List[Tuple[str, Section]]:
    """Spanning sections of L n (E_sign)_C: x - i J x for x = e_sign(frame)."""
    out = []
    for a in range(model.rank):
        x = _as_complex_section(pair.metric.project(model.frame(a), sign))
        if all(_is_zero(c) for c in x):
            continue
        jx = pair.complex.apply(x)
        vec = tuple(p - q for p, q in zip(x, _times_i(jx, model.m)))
        if not all(_is_zero(c) for c in vec):
            out.append((f"e{a}{'+' if sign > 0 else '-'}", vec))
    return out


def closure_check(model: CourantModel, pair: HermitianPair, sign: int) -> Tuple[bool, Optional[dict]]:
    spanning = intersection_spanning(model, pair, sign)
    projector = pair.metric.projector(sign)
    for (la, u), (lb, v) in _decorated(model, spanning, 2):
        w = model.dorfman(u, v)
        in_l = _in_eigenbundle(model, pair.complex, w)
        in_e = all(_is_zero(x - y) for x, y in zip(projector.apply(w), w))
        if not (in_l and in_e):
            return False, {"sections": [la, lb], "bracket": w}
    return True, None


def gk_bracket_check(model: CourantModel, pair: HermitianPair, workers: int = 1) -> Verdict:
    """Closure of L n (E+-)_C compared with integrability of J and G^end J."""
    verdict = Verdict("gk-check", data={"model": model.name})
    plus_ok, plus_witness = closure_check(model, pair, 1)
    minus_ok, minus_witness = closure_check(model, pair, -1)
    j1 = is_integrable(model, pair.complex, workers)
    j2 = is_integrable(model, pair.second, workers)
    closed = plus_ok and minus_ok
    verdict.data.update({"closure_plus": plus_ok, "closure_minus": minus_ok,
                         "J1_integrable": j1, "J2_integrable": j2})
    verdict.add("closure and integrability agree", closed == (j1 and j2))
    verdict.add("generalized Kahler", closed, plus_witness or minus_witness)
    logger.info("GK bracket check on %s: closure %s, integrability %s", model.name, closed, j1 and j2)
    return verdict.finish()


def is_generalized_kahler(model: CourantModel, pair: HermitianPair) -> bool:
    return is_integrable(model, pair.complex) and is_integrable(model, pair.second)


def mixed_bracket_identity(model: CourantModel, pair: HermitianPair) -> Verdict:
    """[u, Jv]_+ - J[u, v]_+ = 0 for u in E-, v in E+, and the mirrored identity."""
    if not is_generalized_kahler(model, pair):
        raise PreconditionError("mixed_bracket_identity needs a generalized Kahler pair")
    verdict = Verdict("mixed-bracket-identity", data={"model": model.name})
    J = pair.complex
    for sign, name in ((1, "[u, Jv]_+ = J[u, v]_+"), (-1, "[u, Jv]_- = J[u, v]_-")):
        source = [(f"e{a}", pair.metric.project(model.frame(a), -sign)) for a in range(model.rank)]
        target = [(f"e{a}", pair.metric.project(model.frame(a), sign)) for a in range(model.rank)]
        source = [(label, s) for label, s in source if not all(_is_zero(x) for x in s)]
        target = [(label, s) for label, s in target if not all(_is_zero(x) for x in s)]
        projector = pair.metric.projector(sign)
        ok, witness = True, None
        mults = list(zip(multiplier_labels(model.m), multipliers(model.m)))
        for (lu, u), (lv, v) in itertools.product(source, target):
            for label, f in mults:
                for fu, fv in ((tuple(f * x for x in u), v), (u, tuple(f * x for x in v))):
                    lhs = projector.apply(model.dorfman(fu, J.apply(fv)))
                    rhs = J.apply(projector.apply(model.dorfman(fu, fv)))
                    if any(not _is_zero(x - y) for x, y in zip(lhs, rhs)):
                        ok, witness = False, {"sections": [lu, lv], "multiplier": label}
                        break
                if not ok:
                    break
            if not ok:
                break
        verdict.add(name, ok, witness)
    return verdict.finish()


def hk_bracket_check(model: CourantModel, hyper: HyperHermitian, workers: int = 1) -> Verdict:
    """Generalized hyper-Kahler: each (G, J_i) generalized Kahler."""
    verdict = Verdict("hk-check", data={"model": model.name})
    tasks = hyper.pairs()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=min(workers, 3)) as executor:
            results = list(executor.map(lambda p: gk_bracket_check(model, p), tasks))
    else:
        results = [gk_bracket_check(model, p) for p in tasks]
    for index, result in enumerate(results, start=1):
        verdict.extend(result, prefix=f"J{index}: ")
    return verdict.finish()
