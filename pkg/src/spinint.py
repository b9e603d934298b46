"""
Pure-spinor integrability criteria.

Projective closedness of a pure spinor is decided as an exact linear
feasibility problem: the unknown section v in d(eta) = gamma_v eta is
searched among trigonometric polynomials of bounded degree. The split
spinor criteria for generalized Kahler and hyper-Kahler structures reuse
the same solver on the modules of E+ and E-.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from src.clifford import GradedTensorModule, Spinor, SpinorModule, is_pure, spinor_of_isotropic
from src.connections import GenConnection, levi_civita, wedge_shift
from src.courant import CourantModel, multiplier_labels
from src.dirac import DiffOperator, SpinConnection, canonical_dgo, dirac, spin_lift_matrix
from src.linalg import QuadSpace, Section, _is_zero, complex_nullspace, inverse, solve
from src.ring import ComplexPoly, TrigPoly, monomials, multipliers
from src.structures import GenMetric, HermitianPair, HyperHermitian, gk_bracket_check, hk_bracket_check
from src.utils.errors import (DimensionMismatchError, InconsistentSystemError, PreconditionError,
                              UnsupportedSignatureError)
from src.utils.reports import Verdict

logger = logging.getLogger(__name__)

DEFAULT_SLACK = 2


def _parts(value, m: int) -> Tuple[TrigPoly, TrigPoly]:
    if isinstance(value, ComplexPoly):
        return value.re, value.im
    if isinstance(value, TrigPoly):
        return value, TrigPoly.zero(m)
    return TrigPoly.constant(m, value), TrigPoly.zero(m)


def _complex_constant(m: int, re: Fraction, im: Fraction) -> ComplexPoly:
    return ComplexPoly(TrigPoly.constant(m, re), TrigPoly.constant(m, im))


def span_solve(target: Dict[int, object], columns: Sequence[Dict[int, object]], m: int
               ) -> Optional[List[Tuple[Fraction, Fraction]]]:
    """Complex constants c_j with sum c_j columns_j = target, or None."""
    rows: Dict[tuple, Dict[int, Fraction]] = {}

    def bump(key, col, c):
        row = rows.setdefault(key, {})
        row[col] = row.get(col, Fraction(0)) + c

    for j, column in enumerate(columns):
        for index, value in column.items():
            re, im = _parts(value, m)
            for mono, c in re.terms.items():
                bump((index, 0, mono), 2 * j, c)
                bump((index, 1, mono), 2 * j + 1, c)
            for mono, c in im.terms.items():
                bump((index, 1, mono), 2 * j, c)
                bump((index, 0, mono), 2 * j + 1, -c)
    rhs: Dict[tuple, Fraction] = {}
    for index, value in target.items():
        re, im = _parts(value, m)
        for mono, c in re.terms.items():
            rhs[(index, 0, mono)] = c
        for mono, c in im.terms.items():
            rhs[(index, 1, mono)] = c
    if not rhs:
        return [(Fraction(0), Fraction(0))] * len(columns)
    keys = sorted(set(rows) | set(rhs), key=repr)
    ncols = 2 * len(columns)
    dense = [[rows.get(key, {}).get(c, Fraction(0)) for c in range(ncols)] for key in keys]
    solution = solve(dense, [rhs.get(key, Fraction(0)) for key in keys], ncols)
    if solution is None:
        return None
    return [(solution[2 * j], solution[2 * j + 1]) for j in range(len(columns))]


def degree_bound(model: CourantModel, eta: Spinor, slack: int) -> int:
    return eta.degree() + model.data_degree() + slack


def _support(*spinors: Spinor) -> set:
    coords = set()
    for s in spinors:
        coords |= s.active_coordinates()
    return coords


def orbit_solve(module: SpinorModule, eta: Spinor, target: Spinor, degree: int
                ) -> Optional[Section]:
    """A section v with coefficients of degree <= degree and gamma_v eta = target."""
    m = module.m
    coords = _support(eta, target)
    monos = monomials(m, degree, coords)
    columns, labels = [], []
    for a in range(module.space.rank):
        for mono in monos:
            column = module.generators[a].apply({k: mono * c for k, c in eta.coeffs.items()})
            if column:
                columns.append(column)
                labels.append((a, mono))
    solution = span_solve(target.coeffs, columns, m)
    if solution is None:
        return None
    v = [ComplexPoly.zero(m) for _ in range(module.space.rank)]
    for (a, mono), (re, im) in zip(labels, solution):
        if re or im:
            v[a] = v[a] + _complex_constant(m, re, im) * mono
    return tuple(v)


def scalar_solve(eta: Spinor, target: Spinor, m: int, degree: int) -> Optional[ComplexPoly]:
    """A function f of degree <= degree with f eta = target."""
    monos = monomials(m, degree, _support(eta, target))
    columns, kept = [], []
    for mono in monos:
        column = {k: mono * c for k, c in eta.coeffs.items()}
        if any(not _is_zero(x) for x in column.values()):
            columns.append(column)
            kept.append(mono)
    solution = span_solve(target.coeffs, columns, m)
    if solution is None:
        return None
    f = ComplexPoly.zero(m)
    for mono, (re, im) in zip(kept, solution):
        if re or im:
            f = f + _complex_constant(m, re, im) * mono
    return f


@dataclass
class ClosednessResult:
    closed: bool
    witness: Optional[Section] = None
    degree: int = 0
    reason: str = ""

    def to_json(self) -> dict:
        return {"closed": self.closed, "degree": self.degree, "reason": self.reason,
                "witness": [x.to_json() for x in self.witness] if self.witness is not None else None}


def projectively_closed(model: CourantModel, op: DiffOperator, eta: Spinor,
                        module: Optional[SpinorModule] = None, slack: int = DEFAULT_SLACK) -> ClosednessResult:
    """Decide d(eta) = gamma_v eta for some v within the degree bound."""
    module = module or model.spinor_module()
    if not is_pure(module, eta):
        raise PreconditionError("projectively_closed needs a pure spinor")
    image = op.apply(eta)
    if image.is_zero():
        return ClosednessResult(True, tuple(ComplexPoly.zero(model.m) for _ in range(model.rank)), 0, "d(eta) = 0")
    degree = degree_bound(model, eta, slack)
    witness = orbit_solve(module, eta, image, degree)
    if witness is None:
        logger.warning("No v with d(eta) = gamma_v eta within degree %d on %s", degree, model.name)
        return ClosednessResult(False, None, degree, f"no solution within degree {degree}")
    logger.debug("Projective closedness witness found within degree %d", degree)
    return ClosednessResult(True, witness, degree, "solved")


def _in_orthogonal(model: CourantModel, basis: Sequence[Section], w: Section) -> bool:
    return all(_is_zero(model.pair(w, l)) for l in basis)


def dirac_structure_equiv(model: CourantModel, basis: Sequence[Section], op: Optional[DiffOperator] = None,
                          slack: int = DEFAULT_SLACK, name: str = "L") -> Verdict:
    """Bracket closure of a maximal isotropic L against projective closedness of its pure spinor."""
    n = model.rank // 2
    if len(basis) != n:
        raise DimensionMismatchError(f"Almost Dirac structures have rank {n}, got {len(basis)}")
    basis = [tuple(x if isinstance(x, ComplexPoly) else ComplexPoly(_parts(x, model.m)[0]) for x in u)
             for u in basis]
    for u, v in itertools.combinations_with_replacement(basis, 2):
        if not _is_zero(model.pair(u, v)):
            raise PreconditionError(f"{name} is not isotropic")
    verdict = Verdict("dirac-structure", data={"model": model.name, "structure": name})
    closed, witness = True, None
    mults = list(zip(multiplier_labels(model.m), multipliers(model.m)))
    for (i, u), (j, v) in itertools.product(enumerate(basis), repeat=2):
        for label, f in mults:
            w = model.dorfman(tuple(f * x for x in u), v)
            if not _in_orthogonal(model, basis, w):
                closed, witness = False, {"sections": [f"l{i}", f"l{j}"], "multiplier": label}
                break
        if not closed:
            break
    module = model.spinor_module()
    eta = spinor_of_isotropic(module, basis)
    op = op or canonical_dgo(model)
    result = projectively_closed(model, op, eta, module, slack)
    verdict.data.update({"bracket_closed": closed, "projectively_closed": result.closed,
                         "spinor": eta, "closedness": result.to_json()})
    verdict.add("bracket closure and projective closedness agree", closed == result.closed)
    verdict.add("Dirac structure", closed and result.closed, witness)
    logger.info("Dirac structure %s on %s: bracket %s, spinor %s", name, model.name, closed, result.closed)
    return verdict.finish()


# ---------------------------------------------------------------------------
# split spinors


@dataclass
class SplitSpinorData:
    """E = E+ + E- from a constant generalized metric, with one spinor module per summand."""
    model: CourantModel
    metric: GenMetric
    D: GenConnection
    plus_basis: List[List[Fraction]]
    minus_basis: List[List[Fraction]]
    plus_module: SpinorModule
    minus_module: SpinorModule
    _change: List[List[Fraction]] = field(default_factory=list, repr=False)
    _ops: Dict[tuple, DiffOperator] = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, model: CourantModel, metric: GenMetric, D: GenConnection) -> "SplitSpinorData":
        if not metric.endo.is_constant():
            raise PreconditionError("Split spinors need a constant generalized metric")
        if not D.preserves(metric.endo):
            raise PreconditionError(f"Connection {D.name} does not preserve {metric.name}")
        bases, modules = [], []
        for sign in (1, -1):
            basis = metric.eigenbasis(sign)
            space = QuadSpace(metric.restricted_gram(model.space, sign))
            if not space.is_neutral():
                raise UnsupportedSignatureError(
                    f"E{'+' if sign > 0 else '-'} has signature {space.signature}; only neutral splits are supported")
            bases.append(basis)
            modules.append(SpinorModule.auto(space, model.m))
        columns = bases[0] + bases[1]
        change = inverse([[vec[i] for vec in columns] for i in range(model.rank)])
        return cls(model, metric, D, bases[0], bases[1], modules[0], modules[1], change)

    def basis(self, sign: int) -> List[List[Fraction]]:
        return self.plus_basis if sign > 0 else self.minus_basis

    def module(self, sign: int) -> SpinorModule:
        return self.plus_module if sign > 0 else self.minus_module

    def coordinates(self, sign: int, u: Section) -> Section:
        """Components of a section of E_sign in the chosen basis."""
        offset = 0 if sign > 0 else len(self.plus_basis)
        rows = self._change[offset:offset + len(self.basis(sign))]
        return tuple(sum((row[i] * x for i, x in enumerate(u) if row[i] and not _is_zero(x)),
                         self.model.zero()) for row in rows)

    def embed(self, sign: int, coords: Sequence) -> Section:
        out = [self.model.zero() for _ in range(self.model.rank)]
        for k, c in enumerate(coords):
            if _is_zero(c):
                continue
            for i, x in enumerate(self.basis(sign)[k]):
                if x:
                    out[i] = out[i] + c * x
        return tuple(out)

    def section(self, sign: int, k: int) -> Section:
        return self.model.section(self.basis(sign)[k])

    def lowered(self, sign: int, u: Section) -> List[List]:
        """a_kl = <D_u b_k, b_l> on E_sign."""
        basis = [self.model.section(b) for b in self.basis(sign)]
        images = [self.D.covariant(u, b) for b in basis]
        return [[self.model.pair(image, b) for b in basis] for image in images]

    def connection(self, sign: int, u: Section) -> DiffOperator:
        """D^{S_sign}_u = pi(u) - gamma(A^_u)/2 on the module of E_sign."""
        key = (sign, tuple(repr(x) for x in u))
        if key not in self._ops:
            module = self.module(sign)
            m = self.model.m
            op = DiffOperator.zero(module.dim, m)
            for i, x in enumerate(self.model.anchor_vector(u)):
                if not _is_zero(x):
                    op = op + DiffOperator.derivative(module.dim, m, i).scale(x)
            lift = spin_lift_matrix(module, self.lowered(sign, u))
            self._ops[key] = op - DiffOperator.multiplication(lift.scale(Fraction(1, 2)), m)
        return self._ops[key]

    def dirac(self, sign: int) -> DiffOperator:
        """(1/2) sum b~_k D^{S_sign}_{b_k} over the basis of E_sign."""
        module = self.module(sign)
        m = self.model.m
        total = DiffOperator.zero(module.dim, m, 1)
        for k in range(len(self.basis(sign))):
            left = DiffOperator.multiplication(module.dual_generators[k].scale(Fraction(1, 2)), m, 1)
            total = total + left @ self.connection(sign, self.section(sign, k))
        return DiffOperator(total.dim, m, total.terms, 1)

    def tensor_module(self) -> GradedTensorModule:
        return GradedTensorModule(self.plus_module, self.minus_module)

    def full_module(self) -> SpinorModule:
        """The module of E realised as S+ (x) S- (bits of S+ first)."""
        p, q = [], []
        for sign in (1, -1):
            module = self.module(sign)
            p += [list(self.embed(sign, vec)) for vec in module.p]
            q += [list(self.embed(sign, vec)) for vec in module.q]
        p = [[x.constant_term() if isinstance(x, TrigPoly) else x for x in vec] for vec in p]
        q = [[x.constant_term() if isinstance(x, TrigPoly) else x for x in vec] for vec in q]
        return SpinorModule(self.model.space, p, q, self.model.m)


def split_dirac(model: CourantModel, split: SplitSpinorData) -> Tuple[DiffOperator, DiffOperator]:
    return split.dirac(1), split.dirac(-1)


def _tensor(graded: GradedTensorModule, sp: Spinor, sm: Spinor) -> Spinor:
    out: Dict[int, object] = {}
    for bp, a in sp.coeffs.items():
        for bm, b in sm.coeffs.items():
            out[graded.index(bp, bm)] = a * b
    return Spinor(graded.dim, out)


def split_dirac_check(model: CourantModel, split: SplitSpinorData) -> Verdict:
    """The full Dirac operator on s+ (x) s- against its four split terms."""
    verdict = Verdict("split-dirac", data={"model": model.name})
    graded = split.tensor_module()
    full = dirac(model, SpinConnection(split.D, split.full_module()))
    plus_dirac, minus_dirac = split_dirac(model, split)
    n_plus = split.plus_module.n
    m = model.m
    mults = list(zip(multiplier_labels(m), multipliers(m)))
    plus_dirs = [split.section(1, k) for k in range(len(split.plus_basis))]
    minus_dirs = [split.section(-1, k) for k in range(len(split.minus_basis))]
    half = Fraction(1, 2)
    ok, witness = True, None
    for bp, bm in itertools.product(range(split.plus_module.dim), range(split.minus_module.dim)):
        for label, f in mults:
            for side in (0, 1):
                sp = split.plus_module.basis_spinor(bp, f if side == 0 else None)
                sm = split.minus_module.basis_spinor(bm, f if side == 1 else None)
                lhs = full.apply(_tensor(graded, sp, sm))
                sign = -1 if bin(bp).count("1") % 2 else 1
                rhs = _tensor(graded, plus_dirac.apply(sp), sm)
                for k, e in enumerate(plus_dirs):
                    gp = Spinor(sp.dim, split.plus_module.dual_generators[k].apply(sp.coeffs)).scale(half)
                    rhs = rhs + _tensor(graded, gp, split.connection(-1, e).apply(sm))
                tail = _tensor(graded, sp, minus_dirac.apply(sm))
                for k, e in enumerate(minus_dirs):
                    gm = Spinor(sm.dim, split.minus_module.dual_generators[k].apply(sm.coeffs)).scale(half)
                    tail = tail + _tensor(graded, split.connection(1, e).apply(sp), gm)
                rhs = rhs + (tail if sign > 0 else -tail)
                if lhs != rhs:
                    ok, witness = False, {"plus": bp, "minus": bm, "multiplier": label}
                    break
            if not ok:
                break
        if not ok:
            break
    verdict.add("Dirac operator splits into four terms", ok, witness)
    logger.debug("Split Dirac check on %s with n+ = %d", model.name, n_plus)
    return verdict.finish()


# ---------------------------------------------------------------------------
# generalized Kahler and hyper-Kahler via spinors


def _restricted_structure(split: SplitSpinorData, endo, sign: int) -> List[List[Fraction]]:
    matrix = endo.constant_matrix()
    basis = split.basis(sign)
    out = []
    for vec in basis:
        image = [sum((matrix[i][j] * vec[j] for j in range(len(vec))), Fraction(0)) for i in range(len(vec))]
        coords = split.coordinates(sign, split.model.section(image))
        out.append([c.constant_term() if isinstance(c, TrigPoly) else Fraction(c) for c in coords])
    # out[k] holds the image of b_k; return the matrix with columns = images
    return [[out[k][l] for k in range(len(basis))] for l in range(len(basis))]


def split_pure_spinor(split: SplitSpinorData, pair: HermitianPair, sign: int) -> Spinor:
    """Pure spinor of L n (E_sign)_C in the module of E_sign."""
    if not pair.complex.endo.is_constant():
        raise PreconditionError("Split pure spinors are built for constant complex structures")
    matrix = _restricted_structure(split, pair.complex.endo, sign)
    n = len(matrix)
    rows = [[(matrix[i][j], Fraction(-1) if i == j else Fraction(0)) for j in range(n)] for i in range(n)]
    m = split.model.m
    basis = [tuple(_complex_constant(m, re, im) for re, im in vec) for vec in complex_nullspace(rows, n)]
    return spinor_of_isotropic(split.module(sign), basis)


@dataclass
class SpinorConditions:
    """The four conditions of the split-spinor criterion, per side."""
    dirac_plus: bool
    dirac_minus: bool
    mixed_plus: bool
    mixed_minus: bool
    degree: int
    witnesses: Dict[str, object] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.dirac_plus and self.dirac_minus and self.mixed_plus and self.mixed_minus


def spinor_conditions(model: CourantModel, pair: HermitianPair, D: GenConnection,
                      slack: int = DEFAULT_SLACK) -> SpinorConditions:
    split = SplitSpinorData.build(model, pair.metric, D)
    spinors = {sign: split_pure_spinor(split, pair, sign) for sign in (1, -1)}
    degree = max(degree_bound(model, eta, slack) for eta in spinors.values())
    results: Dict[str, bool] = {}
    witnesses: Dict[str, object] = {}
    for sign, tag in ((1, "plus"), (-1, "minus")):
        eta = spinors[sign]
        module = split.module(sign)
        image = split.dirac(sign).apply(eta)
        v = orbit_solve(module, eta, image, degree) if not image.is_zero() else ()
        results[f"dirac_{tag}"] = v is not None
        if v is None:
            witnesses[f"dirac_{tag}"] = f"no solution within degree {degree}"
        ok = True
        for k in range(len(split.basis(-sign))):
            image = split.connection(sign, split.section(-sign, k)).apply(eta)
            if image.is_zero():
                continue
            if scalar_solve(eta, image, model.m, degree) is None:
                ok = False
                witnesses[f"mixed_{tag}"] = {"direction": k, "reason": f"no scalar within degree {degree}"}
                break
        results[f"mixed_{tag}"] = ok
    return SpinorConditions(results["dirac_plus"], results["dirac_minus"], results["mixed_plus"],
                            results["mixed_minus"], degree, witnesses)


def second_levi_civita(model: CourantModel, metric: GenMetric, D: GenConnection) -> Optional[GenConnection]:
    """D plus wedge_shift of two vectors of E+, which is again Levi-Civita for the metric."""
    basis = metric.eigenbasis(1)
    if len(basis) < 2:
        return None
    gram = model.space.gram
    n = model.rank
    alpha, beta = ([sum((vec[i] * gram[i][a] for i in range(n)), Fraction(0)) for a in range(n)]
                   for vec in basis[:2])
    return D.plus(wedge_shift(alpha, beta), name=f"{D.name}'")


def projection_identity(model: CourantModel, metric: GenMetric, D: GenConnection) -> bool:
    """D_{e-} v+ = [e-, v+]_+ and its mirror, on the spanning set."""
    for sign in (1, -1):
        projector = metric.projector(sign)
        for a, b in itertools.product(range(model.rank), repeat=2):
            e = metric.project(model.frame(a), -sign)
            v = metric.project(model.frame(b), sign)
            if all(_is_zero(x) for x in e) or all(_is_zero(x) for x in v):
                continue
            for f in multipliers(model.m):
                fv = tuple(f * x for x in v)
                lhs = D.covariant(e, fv)
                rhs = projector.apply(model.dorfman(e, fv))
                if any(not _is_zero(x - y) for x, y in zip(lhs, rhs)):
                    return False
    return True


def gk_spinor_check(model: CourantModel, pair: HermitianPair, D: Optional[GenConnection] = None,
                    slack: int = DEFAULT_SLACK, cross_check: bool = True) -> Verdict:
    D = D or levi_civita(model, pair.metric)
    verdict = Verdict("spinor-gk", data={"model": model.name, "connection": D.name})
    conditions = spinor_conditions(model, pair, D, slack)
    verdict.add("D+ Dirac condition", conditions.dirac_plus, conditions.witnesses.get("dirac_plus"))
    verdict.add("D- Dirac condition", conditions.dirac_minus, conditions.witnesses.get("dirac_minus"))
    verdict.add("D+ along E- condition", conditions.mixed_plus, conditions.witnesses.get("mixed_plus"))
    verdict.add("D- along E+ condition", conditions.mixed_minus, conditions.witnesses.get("mixed_minus"))
    verdict.add("D_{e-} v+ = [e-, v+]_+", projection_identity(model, pair.metric, D))
    other = second_levi_civita(model, pair.metric, D)
    if other is not None:
        again = spinor_conditions(model, pair, other, slack)
        verdict.add("independent of the Levi-Civita connection", again.holds == conditions.holds)
        verdict.add("identity holds for the second connection", projection_identity(model, pair.metric, other))
    verdict.data.update({"degree": conditions.degree, "spinor_gk": conditions.holds})
    if cross_check:
        bracket = gk_bracket_check(model, pair)
        gk = bracket.check("generalized Kahler").passed
        verdict.data["bracket_gk"] = gk
        if gk != conditions.holds:
            if gk and not conditions.holds:
                raise InconsistentSystemError(
                    f"Spinor conditions fail within degree {conditions.degree} but the bracket criterion "
                    "holds; raise the degree slack")
            verdict.add("spinor and bracket criteria agree", False)
        else:
            verdict.add("spinor and bracket criteria agree", True)
    verdict.add("generalized Kahler", conditions.holds)
    logger.info("Spinor GK check on %s: %s", model.name, conditions.holds)
    return verdict.finish()


def hk_spinor_check(model: CourantModel, hyper: HyperHermitian, D: Optional[GenConnection] = None,
                    slack: int = DEFAULT_SLACK, workers: int = 1) -> Verdict:
    D = D or levi_civita(model, hyper.metric)
    verdict = Verdict("spinor-hk", data={"model": model.name})
    pairs = hyper.pairs()

    def run(pair):
        return gk_spinor_check(model, pair, D, slack, cross_check=False)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=min(workers, 3)) as executor:
            results = list(executor.map(run, pairs))
    else:
        results = [run(pair) for pair in pairs]
    per_structure = []
    for index, result in enumerate(results, start=1):
        verdict.extend(result, prefix=f"J{index}: ")
        per_structure.append(result.data["spinor_gk"])
    bracket = hk_bracket_check(model, hyper, workers)
    bracket_hk = all(bracket.check(f"J{i}: generalized Kahler").passed for i in (1, 2, 3))
    verdict.data.update({"per_structure": per_structure, "bracket_hk": bracket_hk})
    verdict.add("spinor and bracket criteria agree", all(per_structure) == bracket_hk)
    return verdict.finish()
