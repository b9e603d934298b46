"""
Generalized connections, torsion and the adapted-connection constructions.

A generalized connection is stored as its deviation from the flat frame
connection (D_{e_a} e_b = 0):

    eta_abc = <D_{e_a} e_b, e_c>

It is metric iff eta is skew in (b, c). All constructions below add
explicit corrections to eta; linear solves only happen for constant data.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from src.courant import CourantModel
from src.linalg import EndoField, FormField, QuadSpace, Section, _is_zero, nullspace, rank, solve
from src.ring import TrigPoly, to_rat
from src.structures import (GenComplex, GenMetric, HermitianPair, HyperHermitian, HyperTriple,
                            is_generalized_kahler, nijenhuis)
from src.utils.errors import (DimensionMismatchError, InconsistentSystemError, MalformedInputError,
                              PreconditionError)
from src.utils.reports import Verdict

logger = logging.getLogger(__name__)

Tensor3 = Dict[Tuple[int, int, int], TrigPoly]


# ---------------------------------------------------------------------------
# sparse 3-tensors


def _put(t: Tensor3, key: Tuple[int, int, int], value) -> None:
    if _is_zero(value):
        return
    total = t[key] + value if key in t else value
    if _is_zero(total):
        t.pop(key, None)
    else:
        t[key] = total


def full_tensor(form: FormField) -> Tensor3:
    """All ordered components of a 3-form."""
    out: Tensor3 = {}
    for key in form.comps:
        for idx in itertools.permutations(key):
            out[idx] = form.component(idx)
    return out


def transform_slot(t: Tensor3, slot: int, endo: EndoField) -> Tensor3:
    """t(.., A e_a, ..) with A acting in the given slot."""
    out: Tensor3 = {}
    for idx, value in t.items():
        i = idx[slot]
        for a in range(endo.rank):
            c = endo.matrix[i][a]
            if _is_zero(c):
                continue
            key = idx[:slot] + (a,) + idx[slot + 1:]
            _put(out, key, value * c)
    return out


def add_tensors(*terms: Tuple[Fraction, Tensor3]) -> Tensor3:
    out: Tensor3 = {}
    for factor, t in terms:
        for key, value in t.items():
            _put(out, key, value * factor)
    return out


def wedge_shift(alpha: Sequence, beta: Sequence) -> Tensor3:
    """eta(u, v, w) = alpha(u) (alpha ^ beta)(v, w) for frame covectors alpha, beta.

    Skew in the last two slots with vanishing cyclic sum.
    """
    out: Tensor3 = {}
    n = len(alpha)
    for a, b, c in itertools.product(range(n), repeat=3):
        value = alpha[a] * (alpha[b] * beta[c] - alpha[c] * beta[b])
        if value:
            out[(a, b, c)] = value
    return out


def rank_two_shift(model: CourantModel, i: int = 0, j: int = 1) -> Tensor3:
    """wedge_shift of the lowered frame vectors e_i, e_j."""
    gram = model.space.gram
    return wedge_shift(list(gram[i]), list(gram[j]))


def cyclic_sum(t: Tensor3) -> Tensor3:
    """(d eta)(u, v, w) = eta(u, v, w) + eta(w, u, v) + eta(v, w, u)."""
    out: Tensor3 = {}
    for (a, b, c), value in t.items():
        _put(out, (a, b, c), value)
        _put(out, (b, c, a), value)
        _put(out, (c, a, b), value)
    return out


def tensor_to_form(t: Tensor3, m: int, n: int, what: str = "tensor") -> FormField:
    """Repackage a totally skew 3-tensor; raises if it is not skew."""
    zero = TrigPoly.zero(m)
    for (a, b, c), value in t.items():
        if len({a, b, c}) < 3 or t.get((b, a, c), zero) != -value or t.get((a, c, b), zero) != -value:
            raise PreconditionError(f"The {what} is not totally skew at {(a, b, c)}")
    return FormField(m, n, 3, {key: value for key, value in t.items() if key[0] < key[1] < key[2]})


def partial(eta: Tensor3, m: int, n: int) -> FormField:
    """Algebraic torsion map on E* (x) Lambda^2 E*."""
    return tensor_to_form(cyclic_sum(eta), m, n, "cyclic sum")


def endo_tensor(model: CourantModel, endos: Sequence[EndoField]) -> Tensor3:
    """eta_abc = <A_a e_b, e_c> for one endomorphism per frame vector."""
    out: Tensor3 = {}
    for a, endo in enumerate(endos):
        low = endo.lowered(model.space)
        for b in range(model.rank):
            for c in range(model.rank):
                _put(out, (a, b, c), low[b][c])
    return out


# ---------------------------------------------------------------------------
# generalized connections


class GenConnection:
    """Flat frame connection plus the correction eta."""

    def __init__(self, model: CourantModel, eta: Optional[Tensor3] = None, name: str = "D"):
        self.model = model
        self.name = name
        self.eta: Tensor3 = {}
        for key, value in (eta or {}).items():
            if any(not 0 <= i < model.rank for i in key):
                raise DimensionMismatchError(f"Connection index {key} out of range")
            _put(self.eta, key, value if isinstance(value, TrigPoly) else TrigPoly.constant(model.m, value))
        self._gamma: Dict[int, EndoField] = {}
        self._torsion: Optional[FormField] = None

    @classmethod
    def flat(cls, model: CourantModel, name: str = "D0") -> "GenConnection":
        return cls(model, {}, name)

    def component(self, a: int, b: int, c: int) -> TrigPoly:
        return self.eta.get((a, b, c), TrigPoly.zero(self.model.m))

    def gamma(self, a: int) -> EndoField:
        """Matrix of v -> D_{e_a} v on constant sections."""
        if a not in self._gamma:
            n, m = self.model.rank, self.model.m
            inv = self.model.space.inverse
            matrix = [[TrigPoly.zero(m) for _ in range(n)] for _ in range(n)]
            for (x, b, c), value in self.eta.items():
                if x != a:
                    continue
                for d in range(n):
                    if inv[c][d]:
                        matrix[d][b] = matrix[d][b] + value * inv[c][d]
            self._gamma[a] = EndoField(m, matrix)
        return self._gamma[a]

    def covariant(self, u: Section, v: Section) -> Section:
        """D_u v."""
        model = self.model
        out = [model.zero() for _ in range(model.rank)]
        for a, ua in enumerate(u):
            if _is_zero(ua):
                continue
            moved = self.gamma(a).apply(v)
            for b in range(model.rank):
                term = model.derive_along(a, v[b]) + moved[b]
                if not _is_zero(term):
                    out[b] = out[b] + ua * term
        return tuple(out)

    def derivative(self, endo: EndoField, a: int) -> EndoField:
        """D_{e_a} A = pi(e_a)(A) + [Gamma_a, A]."""
        m = self.model.m
        derived = EndoField(m, [[self.model.derive_along(a, x) for x in row] for row in endo.matrix])
        return derived + self.gamma(a).commutator(endo)

    def derivative_along(self, endo: EndoField, u: Section) -> EndoField:
        total = EndoField.zero(self.model.m, self.model.rank)
        for a, ua in enumerate(u):
            if _is_zero(ua):
                continue
            total = total + self.derivative(endo, a).scale(ua)
        return total

    def preserves(self, endo: EndoField) -> bool:
        return all(self.derivative(endo, a).is_zero() for a in range(self.model.rank))

    def is_metric(self) -> bool:
        zero = TrigPoly.zero(self.model.m)
        return all(self.eta.get((a, c, b), zero) == -value for (a, b, c), value in self.eta.items())

    def is_adapted(self, endos: Iterable[EndoField]) -> bool:
        return self.is_metric() and all(self.preserves(endo) for endo in endos)

    def torsion_tensor(self) -> Tensor3:
        """T_abc = eta_abc - eta_bac + eta_cab - C_abc."""
        n = self.model.rank
        out: Tensor3 = {}
        for (a, b, c), value in self.eta.items():
            _put(out, (a, b, c), value)
            _put(out, (b, a, c), -value)
            _put(out, (b, c, a), value)
        for a, b, c in itertools.product(range(n), repeat=3):
            value = self.model.structure_tensor(a, b, c)
            if not value.is_zero():
                _put(out, (a, b, c), -value)
        return out

    def torsion(self) -> FormField:
        if self._torsion is None:
            if not self.is_metric():
                raise PreconditionError(f"Connection {self.name} is not metric")
            self._torsion = tensor_to_form(self.torsion_tensor(), self.model.m, self.model.rank, "torsion")
        return self._torsion

    def plus(self, delta: Tensor3, name: Optional[str] = None) -> "GenConnection":
        return GenConnection(self.model, add_tensors((Fraction(1), self.eta), (Fraction(1), delta)),
                             name or self.name)

    def difference(self, other: "GenConnection") -> Tensor3:
        return add_tensors((Fraction(1), self.eta), (Fraction(-1), other.eta))

    def __eq__(self, other):
        if not isinstance(other, GenConnection):
            return NotImplemented
        return self.model is other.model and self.eta == other.eta

    def __hash__(self):
        return hash(frozenset(self.eta.items()))

    def to_json(self) -> dict:
        return {"name": self.name,
                "components": [{"index": list(k), "value": v.to_json()} for k, v in sorted(self.eta.items())]}


def torsion(model: CourantModel, D: GenConnection) -> FormField:
    if D.model is not model:
        raise PreconditionError("Connection belongs to another model")
    return D.torsion()


def bracket_torsion_defect(D: GenConnection, u: Section, v: Section, w: Section):
    """<[u,v],w> + T(u,v,w) - <D_u v - D_v u, w> - <D_w u, v>; zero for metric D."""
    model = D.model
    T = D.torsion()
    diff = tuple(x - y for x, y in zip(D.covariant(u, v), D.covariant(v, u)))
    return (model.pair(model.dorfman(u, v), w) + T.evaluate(u, v, w)
            - model.pair(diff, w) - model.pair(D.covariant(w, u), v))


def make_torsion_free(model: CourantModel, D0: GenConnection) -> GenConnection:
    """D0 - T0/3."""
    T0 = D0.torsion()
    if T0.is_zero():
        return D0
    return D0.plus(add_tensors((Fraction(-1, 3), full_tensor(T0))), name=f"{D0.name}'")


def correction(D: GenConnection, endos: Sequence[EndoField], name: str) -> GenConnection:
    return D.plus(endo_tensor(D.model, endos), name=name)


# ---------------------------------------------------------------------------
# adapted algebras and the algebraic torsion map


@dataclass
class AdaptedAlgebra:
    """Constant skew endomorphisms commuting with a set of structures."""
    gram: List[List[Fraction]]
    basis: List[List[List[Fraction]]]
    name: str = ""

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def lowered(self) -> List[List[List[Fraction]]]:
        """<A e_b, e_c> for each basis element."""
        n = len(self.gram)
        return [[[sum((A[i][b] * self.gram[i][c] for i in range(n)), Fraction(0)) for c in range(n)]
                 for b in range(n)] for A in self.basis]


def adapted_algebra(gram: Sequence[Sequence], tensors: Sequence[Sequence[Sequence]] = (),
                    name: str = "") -> AdaptedAlgebra:
    """Solve A skew and [A, Q] = 0 for every constant Q in tensors."""
    gram = [[to_rat(c) for c in row] for row in gram]
    n = len(gram)
    rows = []

    def var(i, j):
        return i * n + j

    for k in range(n):
        for l in range(k, n):
            row = [Fraction(0)] * (n * n)
            for i in range(n):
                row[var(i, k)] += gram[i][l]
                row[var(i, l)] += gram[i][k]
            rows.append(row)
    for Q in tensors:
        Q = [[to_rat(c) for c in r] for r in Q]
        for i in range(n):
            for j in range(n):
                row = [Fraction(0)] * (n * n)
                for k in range(n):
                    # (AQ - QA)[i][j]
                    row[var(i, k)] += Q[k][j]
                    row[var(k, j)] -= Q[i][k]
                rows.append(row)
    basis = [[[vec[var(i, j)] for j in range(n)] for i in range(n)] for vec in nullspace(rows, n * n)]
    return AdaptedAlgebra(gram, basis, name)


def model_adapted_algebra(model: CourantModel, structures: Sequence[EndoField]) -> AdaptedAlgebra:
    return adapted_algebra(model.space.gram, [s.constant_matrix() for s in structures])


def _torsion_map_rows(algebra: AdaptedAlgebra) -> Tuple[List[List[Fraction]], List[Tuple[int, int, int]]]:
    """Constant matrix of d on V* (x) h in the unknowns x[a, k]."""
    n = len(algebra.gram)
    dim = algebra.dimension
    low = algebra.lowered()
    rows, keys = [], []
    for a, b, c in itertools.combinations(range(n), 3):
        row = [Fraction(0)] * (n * dim)
        for k in range(dim):
            row[a * dim + k] += low[k][b][c]
            row[c * dim + k] += low[k][a][b]
            row[b * dim + k] += low[k][c][a]
        rows.append(row)
        keys.append((a, b, c))
    return rows, keys


def partial_Q(model: CourantModel, structures: Sequence[EndoField], eta: Tensor3) -> FormField:
    """Algebraic torsion map of the structure set; eta must be adapted."""
    shifted = GenConnection(model, eta)
    if not shifted.is_metric():
        raise PreconditionError("eta is not skew in its last two slots")
    for a in range(model.rank):
        raised = shifted.gamma(a)
        for endo in structures:
            if not raised.commutator(endo).is_zero():
                raise PreconditionError(f"eta_{a} does not commute with the structure")
    return partial(eta, model.m, model.rank)


def solve_adapted(model: CourantModel, algebra: AdaptedAlgebra, target: FormField) -> Tensor3:
    """An adapted eta with d eta = target, solved monomial by monomial."""
    rows, keys = _torsion_map_rows(algebra)
    n, dim = model.rank, algebra.dimension
    low = algebra.lowered()
    monomials = sorted({key for value in target.comps.values() for key in value.terms})
    coefficients: Dict[Tuple[int, int], Dict] = {}
    for monomial in monomials:
        rhs = [target.component(key).terms.get(monomial, Fraction(0)) for key in keys]
        solution = solve(rows, rhs, n * dim)
        if solution is None:
            raise InconsistentSystemError("Target 3-form is not in the image of the torsion map")
        for index, value in enumerate(solution):
            if value:
                coefficients.setdefault(divmod(index, dim), {})[monomial] = value
    eta: Tensor3 = {}
    for (a, k), terms in coefficients.items():
        x = TrigPoly(model.m, terms)
        for b in range(n):
            for c in range(n):
                if low[k][b][c]:
                    _put(eta, (a, b, c), x * low[k][b][c])
    return eta


@dataclass
class ProlongationResult:
    dimension: int
    basis: List[Dict[Tuple[int, int, int], Fraction]] = field(default_factory=list)
    algebra: str = ""

    def to_json(self) -> dict:
        return {"algebra": self.algebra, "dimension": self.dimension,
                "basis": [[{"index": list(k), "value": str(v)} for k, v in sorted(b.items())]
                          for b in self.basis]}


def prolongation(algebra: AdaptedAlgebra) -> ProlongationResult:
    """Kernel of d on V* (x) h."""
    n = len(algebra.gram)
    for A in algebra.basis:
        for k in range(n):
            for l in range(n):
                lhs = sum((A[i][k] * algebra.gram[i][l] + A[i][l] * algebra.gram[i][k] for i in range(n)), Fraction(0))
                if lhs:
                    raise PreconditionError("Basis element is not skew for the scalar product")
    dim = algebra.dimension
    if dim == 0:
        return ProlongationResult(0, [], algebra.name)
    rows, _ = _torsion_map_rows(algebra)
    low = algebra.lowered()
    basis = []
    for vec in nullspace(rows, n * dim):
        element: Dict[Tuple[int, int, int], Fraction] = {}
        for index, x in enumerate(vec):
            if not x:
                continue
            a, k = divmod(index, dim)
            for b in range(n):
                for c in range(n):
                    if low[k][b][c]:
                        element[(a, b, c)] = element.get((a, b, c), Fraction(0)) + x * low[k][b][c]
        basis.append({key: v for key, v in element.items() if v})
    logger.debug("Prolongation of %s: dimension %d", algebra.name or "algebra", len(basis))
    return ProlongationResult(len(basis), basis, algebra.name)


def _diagonal_gram(plus: int, minus: int) -> List[List[Fraction]]:
    n = plus + minus
    return [[Fraction(0 if i != j else (1 if i < plus else -1)) for j in range(n)] for i in range(n)]


def named_algebra(name: str) -> AdaptedAlgebra:
    """so:k,l | delta-so:n | u:p,q."""
    try:
        kind, _, args = name.partition(":")
        numbers = [int(x) for x in args.split(",")]
    except ValueError as exc:
        raise MalformedInputError(f"Cannot parse algebra name {name!r}") from exc
    if kind == "so" and len(numbers) == 2:
        return adapted_algebra(_diagonal_gram(*numbers), name=name)
    if kind == "delta-so" and len(numbers) == 1:
        n = numbers[0]
        J = [[Fraction(0 if i != j else (1 if i < n else -1)) for j in range(2 * n)] for i in range(2 * n)]
        K = [[Fraction(int(abs(i - j) == n)) for j in range(2 * n)] for i in range(2 * n)]
        return adapted_algebra(_diagonal_gram(n, n), [J, K], name=name)
    if kind == "u" and len(numbers) == 2:
        p, q = numbers
        n = 2 * (p + q)
        J = [[Fraction(0)] * n for _ in range(n)]
        for i in range(0, n, 2):
            J[i + 1][i] = Fraction(1)
            J[i][i + 1] = Fraction(-1)
        return adapted_algebra(_diagonal_gram(2 * p, 2 * q), [J], name=name)
    raise MalformedInputError(f"Unknown algebra {name!r}")


# ---------------------------------------------------------------------------
# projectors for (hyper)complex structures


def pi_tilde_J(J: EndoField, alpha: FormField) -> Tensor3:
    """alpha(u, v, w) + alpha(u, Jv, Jw)."""
    t = full_tensor(alpha)
    return add_tensors((Fraction(1), t), (Fraction(1), transform_slot(transform_slot(t, 1, J), 2, J)))


def pi_J(J: EndoField, alpha: FormField) -> FormField:
    """Projector of Lambda^3 E* onto the complement of im d_J."""
    t = full_tensor(alpha)
    ju = transform_slot(t, 0, J)
    jv = transform_slot(t, 1, J)
    out = add_tensors((Fraction(1, 4), t),
                      (Fraction(-1, 4), transform_slot(jv, 2, J)),
                      (Fraction(-1, 4), transform_slot(ju, 2, J)),
                      (Fraction(-1, 4), transform_slot(ju, 1, J)))
    return tensor_to_form(out, alpha.m, alpha.rank, "projection")


def pi_tilde_H(triple: HyperTriple, alpha: FormField) -> Tensor3:
    t = full_tensor(alpha)
    terms = [(Fraction(1), t)]
    for j in triple.structures():
        terms.append((Fraction(1), transform_slot(transform_slot(t, 1, j.endo), 2, j.endo)))
    return add_tensors(*terms)


def P_projector(triple: HyperTriple, alpha: FormField) -> FormField:
    """(2/3) sum_i Pi_{J_i}."""
    total = FormField.zero(alpha.m, alpha.rank, 3)
    for j in triple.structures():
        total = total + pi_J(j.endo, alpha)
    return total.scale(Fraction(2, 3))


def _basis_forms(m: int, n: int) -> List[FormField]:
    return [FormField(m, n, 3, {key: TrigPoly.one(m)}) for key in itertools.combinations(range(n), 3)]


def projector_identities(J: GenComplex, n: int, m: int) -> Verdict:
    """Pi_J^2 = Pi_J and Pi_J = Id - d o pi~_J / 4 on a basis of 3-forms."""
    verdict = Verdict("projector-identities", data={"structure": J.name})
    idempotent, factorised = True, True
    for alpha in _basis_forms(m, n):
        image = pi_J(J.endo, alpha)
        idempotent &= pi_J(J.endo, image) == image
        rhs = alpha - partial(pi_tilde_J(J.endo, alpha), m, n).scale(Fraction(1, 4))
        factorised &= rhs == image
    verdict.add("Pi_J idempotent", idempotent)
    verdict.add("Pi_J = Id - d pi~_J / 4", factorised)
    return verdict.finish()


def hyper_projector_identities(triple: HyperTriple, n: int, m: int) -> Verdict:
    verdict = Verdict("hyper-projector-identities")
    idempotent, factorised = True, True
    for alpha in _basis_forms(m, n):
        image = P_projector(triple, alpha)
        idempotent &= P_projector(triple, image) == image
        lhs = partial(pi_tilde_H(triple, alpha), m, n)
        factorised &= lhs == (alpha - image).scale(6)
    verdict.add("P idempotent", idempotent)
    verdict.add("d pi~ = 6 (Id - P)", factorised)
    return verdict.finish()


def projector_rank(J: GenComplex, n: int) -> Tuple[int, int]:
    """(dim im, dim ker) of Pi_J for constant J."""
    keys = list(itertools.combinations(range(n), 3))
    columns = []
    for alpha in _basis_forms(0, n):
        image = pi_J(constant_to_point(J.endo), alpha)
        columns.append([image.component(key).constant_term() for key in keys])
    rows = [list(r) for r in zip(*columns)] if columns else []
    r = rank(rows, len(keys)) if rows else 0
    return r, len(keys) - r


def constant_to_point(endo: EndoField) -> EndoField:
    return EndoField(0, endo.constant_matrix())


# ---------------------------------------------------------------------------
# intrinsic torsion and explicit adapted connections


def intrinsic_torsion_J(model: CourantModel, J: GenComplex, D: GenConnection) -> FormField:
    if not D.is_adapted([J.endo]):
        raise PreconditionError(f"Connection {D.name} is not adapted to {J.name}")
    return pi_J(J.endo, D.torsion())


def eta_tensor(D: GenConnection, J: EndoField) -> Tensor3:
    """eta(u, v, w) = <(D_u J) v, w>."""
    return endo_tensor(D.model, [D.derivative(J, a) for a in range(D.model.rank)])


def D1(model: CourantModel, J: GenComplex, D: GenConnection) -> GenConnection:
    """D_u - J (D_u J) / 2."""
    if not D.is_metric():
        raise PreconditionError(f"Connection {D.name} is not metric")
    endos = [(J.endo @ D.derivative(J.endo, a)).scale(Fraction(-1, 2)) for a in range(model.rank)]
    if all(e.is_zero() for e in endos):
        return D
    return correction(D, endos, f"{D.name}^(1)")


def eta_identities(model: CourantModel, J: GenComplex, D: GenConnection) -> Verdict:
    """Symmetries of eta = <(DJ).,.>, and for torsion-free D the cyclic identities."""
    verdict = Verdict("eta-identities", data={"structure": J.name, "connection": D.name})
    eta = eta_tensor(D, J.endo)
    skew = add_tensors((Fraction(1), eta), (Fraction(1), {(a, c, b): v for (a, b, c), v in eta.items()}))
    verdict.add("eta(u, v, w) = -eta(u, w, v)", not skew)
    twisted = add_tensors((Fraction(1), transform_slot(eta, 1, J.endo)),
                          (Fraction(-1), transform_slot(eta, 2, J.endo)))
    verdict.add("eta(u, Jv, w) = eta(u, v, Jw)", not twisted)
    if D.torsion().is_zero():
        n, m = model.rank, model.m
        base = add_tensors((Fraction(1), transform_slot(eta, 2, J.endo)),
                           (Fraction(1), transform_slot(eta, 0, J.endo)))
        cyclic = tensor_to_form(cyclic_sum(base), m, n, "cyclic sum")
        verdict.add("N = cyclic sum of eta(u,v,Jw) + eta(Ju,v,w)", cyclic == nijenhuis(model, J))
        half = tensor_to_form(cyclic_sum(transform_slot(eta, 2, J.endo)), m, n, "cyclic sum")
        verdict.add("T of D^(1) = half cyclic sum of eta(u,v,Jw)",
                    D1(model, J, D).torsion() == half.scale(Fraction(1, 2)))
    return verdict.finish()


def _kn_endos(model: CourantModel, J: EndoField, D: GenConnection) -> List[EndoField]:
    """-{A_u^sym, J}/4 - J(D_u J)/2 on the frame, A_u(v) = (D_v J) u."""
    n = model.rank
    derivatives = [D.derivative(J, b) for b in range(n)]
    endos = []
    for a in range(n):
        A = EndoField(model.m, [[derivatives[b].matrix[i][a] for b in range(n)] for i in range(n)])
        sym = (A + A.adjoint(model.space)).scale(Fraction(1, 2))
        endos.append(sym.anticommutator(J).scale(Fraction(-1, 4))
                     + (J @ derivatives[a]).scale(Fraction(-1, 2)))
    return endos


def kn_connection(model: CourantModel, J: GenComplex, D: GenConnection) -> GenConnection:
    """Adapted connection with torsion N_J / 4 from a torsion-free D."""
    if not D.is_metric() or not D.torsion().is_zero():
        raise PreconditionError("kn_connection needs a torsion-free metric connection")
    endos = _kn_endos(model, J.endo, D)
    if all(e.is_zero() for e in endos):
        return D
    return correction(D, endos, f"{D.name}~")


def hypercomplex_connection(model: CourantModel, triple: HyperTriple, D: GenConnection) -> GenConnection:
    """D^(1) - pi~(T^(1)) / 6, after making D preserve J1."""
    if not D.is_metric():
        raise PreconditionError(f"Connection {D.name} is not metric")
    if not D.preserves(triple.j1.endo):
        D = D1(model, triple.j1, D)
    first = D1(model, triple.j2, D)
    delta = add_tensors((Fraction(-1, 6), pi_tilde_H(triple, first.torsion())))
    return first.plus(delta, name=f"{D.name}~H")


def levi_civita(model: CourantModel, G: GenMetric) -> GenConnection:
    """Torsion-free connection preserving a constant generalized metric."""
    if not G.endo.is_constant():
        raise PreconditionError("levi_civita is implemented for constant generalized metrics")
    D0 = GenConnection.flat(model)
    T0 = D0.torsion()
    if T0.is_zero():
        return GenConnection(model, D0.eta, "LC")
    algebra = model_adapted_algebra(model, [G.endo])
    eta = solve_adapted(model, algebra, -T0)
    logger.info("Levi-Civita connection of %s on %s: %d correction components", G.name, model.name, len(eta))
    return D0.plus(eta, name="LC")


def levi_civita_check(model: CourantModel, G: GenMetric, D: GenConnection) -> Verdict:
    verdict = Verdict("levi-civita", data={"model": model.name, "connection": D.to_json()})
    verdict.add("metric", D.is_metric())
    verdict.add("D G = 0", D.preserves(G.endo))
    verdict.add("torsion-free", D.is_metric() and D.torsion().is_zero())
    return verdict.finish()


def _sections_of(model: CourantModel, G: GenMetric, sign: int) -> List[Section]:
    out = []
    for a in range(model.rank):
        u = G.project(model.frame(a), sign)
        if not all(_is_zero(x) for x in u):
            out.append(u)
    return out


def gk_connection(model: CourantModel, pair: HermitianPair, D: GenConnection) -> GenConnection:
    """D - J D J / 2 - {A^sym, J} / 4 for a generalized Kahler pair."""
    if not is_generalized_kahler(model, pair):
        raise PreconditionError("gk_connection needs a generalized Kahler pair")
    if not (D.is_metric() and D.preserves(pair.metric.endo) and D.torsion().is_zero()):
        raise PreconditionError(f"{D.name} is not a Levi-Civita connection of {pair.metric.name}")
    endos = _kn_endos(model, pair.complex.endo, D)
    if all(e.is_zero() for e in endos):
        return D
    return correction(D, endos, f"{D.name}~GK")


def gk_connection_check(model: CourantModel, pair: HermitianPair, D: GenConnection,
                        D_tilde: GenConnection) -> Verdict:
    verdict = Verdict("gk-connection", data={"model": model.name})
    verdict.add("torsion-free", D_tilde.torsion().is_zero())
    verdict.add("D G = 0", D_tilde.preserves(pair.metric.endo))
    verdict.add("D J = 0", D_tilde.preserves(pair.complex.endo))
    J = pair.complex.endo
    for sign, label in ((1, "+"), (-1, "-")):
        along = _sections_of(model, pair.metric, sign)
        same = _sections_of(model, pair.metric, sign)
        other = _sections_of(model, pair.metric, -sign)
        projector = pair.metric.projector(sign)
        kills, preserves = True, True
        for u in along:
            DJ = D.derivative_along(J, u)
            for v in other:
                kills &= all(_is_zero(x) for x in DJ.apply(v))
            for v in same:
                w = DJ.apply(v)
                preserves &= all(_is_zero(x - y) for x, y in zip(projector.apply(w), w))
        opposite = "-" if sign > 0 else "+"
        verdict.add(f"(D_E{label} J) E{opposite} = 0", kills)
        verdict.add(f"(D_E{label} J) E{label} in E{label}", preserves)
    return verdict.finish()


def hk_eta_formula(model: CourantModel, hyper: HyperHermitian, D: GenConnection) -> Tensor3:
    """The twelve-term expression of eta in terms of D J2."""
    j1, j2, j3 = (j.endo for j in hyper.triple.structures())
    n = model.rank
    frames = [model.frame(a) for a in range(n)]
    DJ2 = [D.derivative(j2, a) for a in range(n)]

    def along(u):
        total = EndoField.zero(model.m, n)
        for a, ua in enumerate(u):
            if not _is_zero(ua):
                total = total + DJ2[a].scale(ua)
        return total

    twelfth = Fraction(1, 12)
    out: Tensor3 = {}
    for a, b, c in itertools.product(range(n), repeat=3):
        u, v, w = frames[a], frames[b], frames[c]
        first = [along(j1.apply(v)).apply(j3.apply(w)), along(j2.apply(v)).apply(w),
                 along(j3.apply(v)).apply(j1.apply(w)), j2.apply(DJ2[b].apply(w))]
        x = tuple(p + q - r + s for p, q, r, s in zip(*first))
        second = [j3.apply(along(j1.apply(w)).apply(u)), along(j2.apply(w)).apply(u),
                  j1.apply(along(j3.apply(w)).apply(u)), j2.apply(DJ2[c].apply(u))]
        y = tuple(p - q - r - s for p, q, r, s in zip(*second))
        value = (model.pair(x, u) - model.pair(y, v)) * twelfth
        _put(out, (a, b, c), value)
    return out


def hk_connection(model: CourantModel, hyper: HyperHermitian, D: GenConnection) -> GenConnection:
    """Levi-Civita connection preserving J1, J2, J3 of a generalized hyper-Kahler structure."""
    for index, pair in enumerate(hyper.pairs(), start=1):
        if not is_generalized_kahler(model, pair):
            raise PreconditionError(f"(G, J{index}) is not generalized Kahler")
    if not (D.is_metric() and D.preserves(hyper.metric.endo) and D.torsion().is_zero()):
        raise PreconditionError(f"{D.name} is not a Levi-Civita connection")
    if not D.preserves(hyper.triple.j1.endo):
        raise PreconditionError(f"{D.name} does not preserve J1")
    first = D1(model, hyper.triple.j2, D)
    delta = add_tensors((Fraction(-1, 6), pi_tilde_H(hyper.triple, first.torsion())))
    return first.plus(delta, name=f"{D.name}~HK")


def hk_connection_check(model: CourantModel, hyper: HyperHermitian, D: GenConnection,
                        D_tilde: GenConnection) -> Verdict:
    verdict = Verdict("hk-connection", data={"model": model.name})
    verdict.add("torsion-free", D_tilde.torsion().is_zero())
    verdict.add("D G = 0", D_tilde.preserves(hyper.metric.endo))
    for index, j in enumerate(hyper.triple.structures(), start=1):
        verdict.add(f"D J{index} = 0", D_tilde.preserves(j.endo))
    first = D1(model, hyper.triple.j2, D)
    delta = add_tensors((Fraction(-1, 6), pi_tilde_H(hyper.triple, first.torsion())))
    verdict.add("twelve-term formula", hk_eta_formula(model, hyper, D) == delta)
    mixed = True
    plus = _sections_of(model, hyper.metric, 1)
    minus = _sections_of(model, hyper.metric, -1)
    shifted = GenConnection(model, delta)
    tensor = shifted.eta
    for a in range(model.rank):
        u = model.frame(a)
        for v, w in itertools.chain(itertools.product(plus, minus), itertools.product(minus, plus)):
            value = TrigPoly.zero(model.m)
            for (x, b, c), e in tensor.items():
                if x == a and not _is_zero(v[b]) and not _is_zero(w[c]):
                    value = value + e * v[b] * w[c]
            mixed &= value.is_zero()
    verdict.add("eta(u, v+, w-) = 0", mixed)
    return verdict.finish()


# ---------------------------------------------------------------------------
# Born geometry on a torus


class AffineConnection:
    """Connection on T^m: Gamma[i][k][j] is the d_k component of nabla_{d_i} d_j."""

    def __init__(self, m: int, gamma: Sequence[Sequence[Sequence]], name: str = "nabla"):
        self.m = m
        self.name = name
        self.gamma = [EndoField(m, matrix) for matrix in gamma]
        if len(self.gamma) != m or any(g.rank != m for g in self.gamma):
            raise DimensionMismatchError(f"Connection on T^{m} needs {m} matrices of size {m}")

    @classmethod
    def flat(cls, m: int, name: str = "flat") -> "AffineConnection":
        return cls(m, [[[0] * m for _ in range(m)] for _ in range(m)], name)

    def covariant(self, X: Section, Y: Section) -> Section:
        out = [TrigPoly.zero(self.m) for _ in range(self.m)]
        for i, xi in enumerate(X):
            if _is_zero(xi):
                continue
            moved = self.gamma[i].apply(Y)
            for k in range(self.m):
                out[k] = out[k] + xi * (Y[k].derive(i) + moved[k])
        return tuple(out)

    def derivative(self, endo: EndoField, i: int) -> EndoField:
        derived = EndoField(self.m, [[x.derive(i) for x in row] for row in endo.matrix])
        return derived + self.gamma[i].commutator(endo)

    def preserves_endo(self, endo: EndoField) -> bool:
        return all(self.derivative(endo, i).is_zero() for i in range(self.m))

    def preserves_form(self, form: Sequence[Sequence[TrigPoly]]) -> bool:
        """nabla of a (0,2)-tensor vanishes."""
        for i in range(self.m):
            for a in range(self.m):
                for b in range(self.m):
                    value = form[a][b].derive(i)
                    for k in range(self.m):
                        value = value - self.gamma[i].matrix[k][a] * form[k][b] \
                            - self.gamma[i].matrix[k][b] * form[a][k]
                    if not _is_zero(value):
                        return False
        return True

    def to_json(self) -> dict:
        return {"name": self.name, "gamma": [g.to_json() for g in self.gamma]}


def _lift_matrix(m: int, matrix) -> List[List[TrigPoly]]:
    return [[x if isinstance(x, TrigPoly) else TrigPoly.constant(m, x) for x in row] for row in matrix]


@dataclass
class BornStructure:
    """(eta, g, K) on T^m with an exact inverse of eta supplied."""
    m: int
    eta: List[List[TrigPoly]]
    eta_inverse: List[List[TrigPoly]]
    g: List[List[TrigPoly]]
    K: EndoField

    def __post_init__(self):
        self.eta = _lift_matrix(self.m, self.eta)
        self.eta_inverse = _lift_matrix(self.m, self.eta_inverse)
        self.g = _lift_matrix(self.m, self.g)

    @property
    def J(self) -> EndoField:
        return EndoField(self.m, self.eta_inverse) @ EndoField(self.m, self.g)

    @property
    def I(self) -> EndoField:
        return self.K @ self.J

    def lower(self, X: Section, Y: Section):
        total = TrigPoly.zero(self.m)
        for a in range(self.m):
            for b in range(self.m):
                if not _is_zero(X[a]) and not _is_zero(Y[b]):
                    total = total + X[a] * self.eta[a][b] * Y[b]
        return total

    def adjoint_apply(self, endo: EndoField, Y: Section) -> Section:
        """B* Y with eta(B* Y, Z) = eta(Y, B Z)."""
        covector = [self.lower(Y, endo.column(l)) for l in range(self.m)]
        return tuple(sum((self.eta_inverse[k][l] * covector[l] for l in range(self.m)), TrigPoly.zero(self.m))
                     for k in range(self.m))

    def validate(self) -> Verdict:
        verdict = Verdict("validate-born")
        m = self.m
        identity = EndoField.identity(m, m)
        eta = EndoField(m, self.eta)
        verdict.add("eta inverse", eta @ EndoField(m, self.eta_inverse) == identity)
        skew = all(_is_zero(self.lower(self.K.column(a), _unit(m, b)) + self.lower(_unit(m, a), self.K.column(b)))
                   for a in range(m) for b in range(m))
        verdict.add("K skew for eta", skew)
        verdict.add("K involution", self.K @ self.K == identity)
        verdict.add("J involution", self.J @ self.J == identity)
        verdict.add("J K = -K J", self.J.anticommutator(self.K).is_zero())
        positive = True
        if all(x.is_constant() for row in self.g for x in row):
            try:
                positive = QuadSpace([[x.constant_term() for x in row] for row in self.g]).signature == (m, 0)
            except PreconditionError:
                positive = False
        verdict.add("g positive definite", positive)
        return verdict.finish()


def _unit(m: int, a: int) -> Section:
    return tuple(TrigPoly.one(m) if b == a else TrigPoly.zero(m) for b in range(m))


def _endo_of(nabla: AffineConnection, X: Section) -> EndoField:
    """Z -> nabla_Z X."""
    m = nabla.m
    columns = [nabla.covariant(_unit(m, l), X) for l in range(m)]
    return EndoField(m, [[columns[l][k] for l in range(m)] for k in range(m)])


def levi_civita_of(born: BornStructure) -> AffineConnection:
    """Koszul formula for eta with the supplied inverse."""
    m = born.m
    gamma = []
    half = Fraction(1, 2)
    for i in range(m):
        matrix = [[TrigPoly.zero(m) for _ in range(m)] for _ in range(m)]
        for k in range(m):
            for j in range(m):
                total = TrigPoly.zero(m)
                for l in range(m):
                    inner = born.eta[j][l].derive(i) + born.eta[i][l].derive(j) - born.eta[i][j].derive(l)
                    if not inner.is_zero():
                        total = total + born.eta_inverse[k][l] * inner
                matrix[k][j] = total * half
        gamma.append(matrix)
    return AffineConnection(m, gamma, "nabla^eta")


def canonical_connection(born: BornStructure) -> AffineConnection:
    """nabla^eta + K (nabla^eta K) / 2."""
    base = levi_civita_of(born)
    gamma = [base.gamma[i] + (born.K @ base.derivative(born.K, i)).scale(Fraction(1, 2)) for i in range(born.m)]
    return AffineConnection(born.m, [g.matrix for g in gamma], "nabla^c")


def d_bracket(born: BornStructure, nabla_c: AffineConnection, X: Section, Y: Section) -> Section:
    """[X, Y]^c."""
    first = nabla_c.covariant(X, Y)
    second = nabla_c.covariant(Y, X)
    third = born.adjoint_apply(_endo_of(nabla_c, X), Y)
    return tuple(a - b + c for a, b, c in zip(first, second, third))


def born_connection(born: BornStructure) -> AffineConnection:
    report = born.validate()
    if not report.passed:
        raise PreconditionError("Born data fail: " + ", ".join(c.name for c in report.failures))
    m = born.m
    nabla_c = canonical_connection(born)
    J, K = born.J, born.K
    identity = EndoField.identity(m, m)
    plus = (identity + J).scale(Fraction(1, 2))
    minus = (identity - J).scale(Fraction(1, 2))
    gamma = []
    for i in range(m):
        X = _unit(m, i)
        xp, xm = plus.apply(X), minus.apply(X)
        columns = []
        for j in range(m):
            Y = _unit(m, j)
            yp, ym = plus.apply(Y), minus.apply(Y)
            terms = [plus.apply(d_bracket(born, nabla_c, xm, yp)),
                     minus.apply(d_bracket(born, nabla_c, xp, ym)),
                     plus.apply(K.apply(d_bracket(born, nabla_c, xp, K.apply(yp)))),
                     minus.apply(K.apply(d_bracket(born, nabla_c, xm, K.apply(ym))))]
            columns.append(tuple(sum(parts, TrigPoly.zero(m)) for parts in zip(*terms)))
        gamma.append([[columns[j][k] for j in range(m)] for k in range(m)])
    return AffineConnection(m, gamma, "nabla^B")


def generalized_torsion(born: BornStructure, nabla: AffineConnection) -> Dict[Tuple[int, int, int], TrigPoly]:
    """Frame components of eta(nabla_X Y - nabla_Y X - [X,Y]^c + (nabla X)* Y, Z)."""
    m = born.m
    nabla_c = canonical_connection(born)
    out = {}
    for i, j in itertools.product(range(m), repeat=2):
        X, Y = _unit(m, i), _unit(m, j)
        value = [a - b - c + d for a, b, c, d in zip(nabla.covariant(X, Y), nabla.covariant(Y, X),
                                                     d_bracket(born, nabla_c, X, Y),
                                                     born.adjoint_apply(_endo_of(nabla, X), Y))]
        for k in range(m):
            component = born.lower(tuple(value), _unit(m, k))
            if not component.is_zero():
                out[(i, j, k)] = component
    return out


def _value_at(matrix: Sequence[Sequence[TrigPoly]], point: Sequence[int]) -> List[List[Fraction]]:
    return [[x.evaluate(point) for x in row] for row in matrix]


def born_commutant(born: BornStructure, point: Optional[Sequence[int]] = None) -> AdaptedAlgebra:
    """eta-skew endomorphisms commuting with J, K and I at one grid point."""
    point = tuple(point) if point is not None else (0,) * born.m
    structures = [_value_at(E.matrix, point) for E in (born.J, born.K, born.I)]
    return adapted_algebra(_value_at(born.eta, point), structures, name="born-commutant")


def born_check(born: BornStructure, nabla: AffineConnection) -> Verdict:
    verdict = Verdict("born", data={"connection": nabla.to_json()})
    torsion_values = generalized_torsion(born, nabla)
    verdict.add("generalized torsion vanishes", not torsion_values,
                {"components": torsion_values} if torsion_values else None)
    verdict.add("preserves eta", nabla.preserves_form(born.eta))
    verdict.add("preserves J", nabla.preserves_endo(born.J))
    verdict.add("preserves K", nabla.preserves_endo(born.K))
    verdict.add("preserves I", nabla.preserves_endo(born.I))
    commutant = born_commutant(born)
    dimension = prolongation(commutant).dimension
    verdict.add("compatible torsion-free connection is unique", dimension == 0,
                None if dimension == 0 else {"prolongation_dimension": dimension})
    verdict.data.update({"commutant_dimension": commutant.dimension, "prolongation_dimension": dimension})
    return verdict.finish()
