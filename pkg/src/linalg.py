"""
Quadratic vector bundles over a framed torus.

Sections, forms, endomorphisms and general tensors carry TrigPoly (or
ComplexPoly) coefficients in a global frame whose gram matrix is constant.
Exact row reduction is delegated to sympy.
"""

from __future__ import annotations

import itertools
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import sympy
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from src.ring import ComplexPoly, TrigPoly, to_rat
from src.utils.errors import DimensionMismatchError, PreconditionError

logger = logging.getLogger(__name__)

Section = Tuple  # tuple of ring elements, one per frame vector


# ---------------------------------------------------------------------------
# exact rational matrices


def _to_sympy(rows: Sequence[Sequence[Fraction]], ncols: int) -> sympy.Matrix:
    data = [[sympy.Rational(to_rat(c).numerator, to_rat(c).denominator) for c in row] for row in rows]
    if not data:
        return sympy.zeros(0, ncols)
    return sympy.Matrix(data)


def _from_sympy(value) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def rref(rows: Sequence[Sequence[Fraction]], ncols: int) -> Tuple[List[List[Fraction]], Tuple[int, ...]]:
    """Reduced row echelon form with leftmost pivots; zero rows dropped."""
    rows = [row for row in rows if any(c != 0 for c in row)]
    if not rows:
        return [], ()
    data = [[QQ(to_rat(c).numerator, to_rat(c).denominator) for c in row] for row in rows]
    matrix = DomainMatrix(data, (len(data), ncols), QQ).to_sparse()
    reduced, pivots = matrix.rref()
    dense = reduced.to_Matrix()
    out = [[_from_sympy(dense[i, j]) for j in range(ncols)] for i in range(len(pivots))]
    return out, tuple(pivots)


def rank(rows: Sequence[Sequence[Fraction]], ncols: int) -> int:
    return len(rref(rows, ncols)[1])


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[List[Fraction]]:
    """Kernel basis read off the rref: one vector per free column."""
    reduced, pivots = rref(rows, ncols)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            vec[p] = -row[f]
        basis.append(vec)
    return basis


def solve(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction], ncols: int) -> Optional[List[Fraction]]:
    """A particular solution (free variables 0) or None if inconsistent."""
    augmented = [list(row) + [to_rat(b)] for row, b in zip(rows, rhs)]
    reduced, pivots = rref(augmented, ncols + 1)
    if ncols in pivots:
        return None
    solution = [Fraction(0)] * ncols
    for row, p in zip(reduced, pivots):
        solution[p] = row[ncols]
    return solution


def realify(rows: Sequence[Sequence[Tuple[Fraction, Fraction]]], ncols: int) -> List[List[Fraction]]:
    """Real block form [[A, -B], [B, A]] of the complex matrix A + iB."""
    top = [[c[0] for c in row] + [-c[1] for c in row] for row in rows]
    bottom = [[c[1] for c in row] + [c[0] for c in row] for row in rows]
    return top + bottom


def complex_rank(rows: Sequence[Sequence[Tuple[Fraction, Fraction]]], ncols: int) -> int:
    return rank(realify(rows, ncols), 2 * ncols) // 2


def complex_nullspace(rows: Sequence[Sequence[Tuple[Fraction, Fraction]]], ncols: int) -> List[List[Tuple[Fraction, Fraction]]]:
    """Kernel over Q(i), extracted from the real kernel of the block form."""
    real_basis = nullspace(realify(rows, ncols), 2 * ncols)
    chosen: List[List[Tuple[Fraction, Fraction]]] = []
    span: List[List[Fraction]] = []
    for w in real_basis:
        if 2 * len(chosen) == len(real_basis):
            break
        rotated = [-x for x in w[ncols:]] + list(w[:ncols])
        trial = span + [list(w), rotated]
        if rank(trial, 2 * ncols) == len(span) + 2:
            span = trial
            chosen.append([(w[j], w[ncols + j]) for j in range(ncols)])
    return chosen


def inverse(matrix: Sequence[Sequence[Fraction]]) -> List[List[Fraction]]:
    n = len(matrix)
    m = _to_sympy(matrix, n)
    if m.det() == 0:
        raise PreconditionError("Matrix is singular")
    inv = m.inv()
    return [[_from_sympy(inv[i, j]) for j in range(n)] for i in range(n)]


def determinant(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    dm = DomainMatrix.from_Matrix(_to_sympy(matrix, len(matrix)))
    return _from_sympy(dm.domain.to_sympy(dm.det()))


def identity_matrix(n: int) -> List[List[Fraction]]:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def mat_mul(a, b):
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum((a[i][k] * b[k][j] for k in range(inner)), Fraction(0)) for j in range(cols)]
            for i in range(len(a))]


def transpose(a):
    return [list(col) for col in zip(*a)]


def congruence_diagonalize(gram: Sequence[Sequence[Fraction]]) -> Tuple[List[Fraction], List[List[Fraction]]]:
    """Symmetric Gaussian elimination over Q.

    Returns (d, vecs) with vecs[i]^T gram vecs[j] = d[i] delta_ij. Pivots are
    chosen as the first nonzero diagonal entry, else the first nonzero
    off-diagonal partner.
    """
    n = len(gram)

    def form(u, v):
        return sum((u[i] * gram[i][j] * v[j] for i in range(n) for j in range(n) if u[i] and v[j]), Fraction(0))

    vecs = identity_matrix(n)
    diag: List[Fraction] = []
    for k in range(n):
        if form(vecs[k], vecs[k]) == 0:
            swap = next((j for j in range(k + 1, n) if form(vecs[j], vecs[j]) != 0), None)
            if swap is not None:
                vecs[k], vecs[swap] = vecs[swap], vecs[k]
            else:
                partner = next((j for j in range(k + 1, n) if form(vecs[k], vecs[j]) != 0), None)
                if partner is not None:
                    vecs[k] = [x + y for x, y in zip(vecs[k], vecs[partner])]
        d = form(vecs[k], vecs[k])
        diag.append(d)
        if d == 0:
            continue
        for j in range(k + 1, n):
            c = form(vecs[k], vecs[j]) / d
            if c:
                vecs[j] = [x - c * y for x, y in zip(vecs[j], vecs[k])]
    return diag, vecs


# ---------------------------------------------------------------------------
# quadratic spaces and sections


class QuadSpace:
    """A frame with a constant, symmetric, invertible gram matrix."""

    def __init__(self, gram: Sequence[Sequence]):
        self.gram = tuple(tuple(to_rat(c) for c in row) for row in gram)
        self.rank = len(self.gram)
        if any(len(row) != self.rank for row in self.gram):
            raise DimensionMismatchError("Gram matrix is not square")
        for i in range(self.rank):
            for j in range(i):
                if self.gram[i][j] != self.gram[j][i]:
                    raise PreconditionError(f"Gram matrix not symmetric at ({i}, {j})")
        self.inverse = tuple(tuple(row) for row in inverse(self.gram))
        diag, self.diagonal_basis = congruence_diagonalize(self.gram)
        self.diagonal = tuple(diag)

    @property
    def signature(self) -> Tuple[int, int]:
        return (sum(1 for d in self.diagonal if d > 0), sum(1 for d in self.diagonal if d < 0))

    def is_neutral(self) -> bool:
        k, l = self.signature
        return k == l

    def pair(self, u: Section, v: Section):
        """<u, v> for sections with ring coefficients."""
        total = None
        for a, ua in enumerate(u):
            if _is_zero(ua):
                continue
            for b, vb in enumerate(v):
                g = self.gram[a][b]
                if g == 0 or _is_zero(vb):
                    continue
                term = (ua * vb) * g
                total = term if total is None else total + term
        if total is None:
            return _zero_like(u[0] if u else None, v[0] if v else None)
        return total

    def pair_const(self, u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
        return sum((u[a] * self.gram[a][b] * v[b] for a in range(self.rank)
                    for b in range(self.rank) if u[a] and v[b]), Fraction(0))

    def dual_vector(self, a: int) -> List[Fraction]:
        """Components of the metric dual frame vector e~_a = sum_b G^{ab} e_b."""
        return list(self.inverse[a])

    def __eq__(self, other):
        return isinstance(other, QuadSpace) and self.gram == other.gram

    def __hash__(self):
        return hash(self.gram)

    def __repr__(self):
        return f"QuadSpace(rank={self.rank}, signature={self.signature})"


def _is_zero(x) -> bool:
    if isinstance(x, (int, Fraction)):
        return x == 0
    return x.is_zero()


def _zero_like(*samples):
    for s in samples:
        if isinstance(s, ComplexPoly):
            return ComplexPoly.zero(s.m)
    for s in samples:
        if isinstance(s, TrigPoly):
            return TrigPoly.zero(s.m)
    return Fraction(0)


def zero_section(m: int, n: int) -> Section:
    z = TrigPoly.zero(m)
    return tuple(z for _ in range(n))


def frame_section(m: int, n: int, a: int, coef=None) -> Section:
    z = TrigPoly.zero(m)
    coef = TrigPoly.one(m) if coef is None else coef
    return tuple(coef if b == a else z for b in range(n))


def const_section(m: int, vector: Sequence) -> Section:
    return tuple(TrigPoly.constant(m, c) for c in vector)


def sec_add(u: Section, v: Section) -> Section:
    return tuple(x + y for x, y in zip(u, v))


def sec_sub(u: Section, v: Section) -> Section:
    return tuple(x - y for x, y in zip(u, v))


def sec_scale(f, u: Section) -> Section:
    return tuple(f * x for x in u)


def sec_is_zero(u: Section) -> bool:
    return all(_is_zero(x) for x in u)


def sec_combination(coefs: Sequence, sections: Sequence[Section], n: int, m: int) -> Section:
    result = zero_section(m, n)
    for c, s in zip(coefs, sections):
        if not _is_zero(c):
            result = sec_add(result, sec_scale(c, s))
    return result


def to_complex(u: Section) -> Section:
    return tuple(x if isinstance(x, ComplexPoly) else ComplexPoly(x) for x in u)


# ---------------------------------------------------------------------------
# forms


def _sort_sign(idx: Tuple[int, ...]) -> Tuple[int, Tuple[int, ...]]:
    """Sign of the sorting permutation, 0 on repeated indices."""
    if len(set(idx)) < len(idx):
        return 0, tuple(sorted(idx))
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


class FormField:
    """Alternating d-form on E stored on strictly increasing index tuples."""

    __slots__ = ("m", "rank", "degree", "comps")

    def __init__(self, m: int, rank: int, degree: int, comps: Optional[Dict[Tuple[int, ...], object]] = None):
        self.m = m
        self.rank = rank
        self.degree = degree
        self.comps = {}
        for idx, value in (comps or {}).items():
            if len(idx) != degree:
                raise DimensionMismatchError(f"Index {idx} does not match degree {degree}")
            sign, key = _sort_sign(tuple(idx))
            if sign == 0 or _is_zero(value):
                continue
            value = value if sign > 0 else -value
            total = self.comps[key] + value if key in self.comps else value
            if _is_zero(total):
                self.comps.pop(key, None)
            else:
                self.comps[key] = total

    @classmethod
    def zero(cls, m: int, rank: int, degree: int) -> "FormField":
        return cls(m, rank, degree)

    @classmethod
    def from_function(cls, m: int, rank: int, degree: int, fn) -> "FormField":
        comps = {}
        for idx in itertools.combinations(range(rank), degree):
            value = fn(idx)
            if not _is_zero(value):
                comps[idx] = value
        return cls(m, rank, degree, comps)

    def component(self, idx: Sequence[int]):
        sign, key = _sort_sign(tuple(idx))
        value = self.comps.get(key) if sign else None
        if value is None:
            return TrigPoly.zero(self.m)
        return value if sign > 0 else -value

    def is_zero(self) -> bool:
        return not self.comps

    def _same_shape(self, other: "FormField") -> None:
        if (self.m, self.rank, self.degree) != (other.m, other.rank, other.degree):
            raise DimensionMismatchError("Forms of different shape")

    def __add__(self, other: "FormField") -> "FormField":
        self._same_shape(other)
        comps = dict(self.comps)
        for key, value in other.comps.items():
            comps[key] = comps[key] + value if key in comps else value
        return FormField(self.m, self.rank, self.degree, comps)

    def __neg__(self) -> "FormField":
        return FormField(self.m, self.rank, self.degree, {k: -v for k, v in self.comps.items()})

    def __sub__(self, other: "FormField") -> "FormField":
        return self + (-other)

    def scale(self, factor) -> "FormField":
        return FormField(self.m, self.rank, self.degree, {k: factor * v for k, v in self.comps.items()})

    def __eq__(self, other):
        if not isinstance(other, FormField):
            return NotImplemented
        return (self.rank, self.degree) == (other.rank, other.degree) and self.comps == other.comps

    def __hash__(self):
        return hash((self.rank, self.degree, frozenset(self.comps.items())))

    def __repr__(self):
        body = ", ".join(f"{k}: {v}" for k, v in sorted(self.comps.items()))
        return f"FormField(degree={self.degree}, {{{body}}})"

    def evaluate(self, *sections: Section):
        """alpha(u_1, ..., u_d) for sections with ring coefficients."""
        if len(sections) != self.degree:
            raise DimensionMismatchError("Wrong number of arguments")
        total = None
        for key, value in self.comps.items():
            for perm in itertools.permutations(range(self.degree)):
                sign = _perm_sign(perm)
                term = value
                for slot, pos in enumerate(perm):
                    coef = sections[slot][key[pos]]
                    if _is_zero(coef):
                        term = None
                        break
                    term = term * coef
                if term is None:
                    continue
                term = term if sign > 0 else -term
                total = term if total is None else total + term
        if total is None:
            return _zero_like(*(s[0] for s in sections if s)) if sections else TrigPoly.zero(self.m)
        return total

    def wedge(self, other: "FormField") -> "FormField":
        if self.rank != other.rank:
            raise DimensionMismatchError("Forms on different bundles")
        p, q = self.degree, other.degree
        comps = {}
        for a_key, a_val in self.comps.items():
            for b_key, b_val in other.comps.items():
                sign, key = _sort_sign(a_key + b_key)
                if sign == 0:
                    continue
                term = a_val * b_val
                term = term if sign > 0 else -term
                comps[key] = comps[key] + term if key in comps else term
        return FormField(self.m, self.rank, p + q, comps)

    def interior(self, v: Section) -> "FormField":
        """iota_v alpha = alpha(v, ...)."""
        if self.degree == 0:
            raise DimensionMismatchError("Cannot contract a 0-form")
        comps = {}
        for key, value in self.comps.items():
            for pos, i in enumerate(key):
                if _is_zero(v[i]):
                    continue
                rest = key[:pos] + key[pos + 1:]
                term = v[i] * value
                term = term if pos % 2 == 0 else -term
                comps[rest] = comps[rest] + term if rest in comps else term
        return FormField(self.m, self.rank, self.degree - 1, comps)

    def to_tensor(self, space: "QuadSpace") -> "TensorField":
        comps = {}
        for key, value in self.comps.items():
            for perm in itertools.permutations(range(self.degree)):
                idx = tuple(key[p] for p in perm)
                comps[idx] = value if _perm_sign(perm) > 0 else -value
        return TensorField(space, self.m, ("down",) * self.degree, comps)

    def to_json(self) -> dict:
        return {"degree": self.degree,
                "components": [{"index": list(k), "value": v.to_json()} for k, v in sorted(self.comps.items())]}


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def wedge(a: FormField, b: FormField) -> FormField:
    return a.wedge(b)


def interior(v: Section, a: FormField) -> FormField:
    return a.interior(v)


def covector_form(m: int, covector: Section) -> FormField:
    return FormField(m, len(covector), 1, {(i,): c for i, c in enumerate(covector)})


# ---------------------------------------------------------------------------
# general tensors


class TensorField:
    """Sparse tensor with a slot pattern of 'up'/'down' indices."""

    __slots__ = ("space", "m", "slots", "comps")

    def __init__(self, space: QuadSpace, m: int, slots: Sequence[str], comps: Optional[Dict[Tuple[int, ...], object]] = None):
        self.space = space
        self.m = m
        self.slots = tuple(slots)
        if any(s not in ("up", "down") for s in self.slots):
            raise DimensionMismatchError(f"Bad slot pattern {self.slots}")
        self.comps = {}
        for idx, value in (comps or {}).items():
            if len(idx) != len(self.slots) or any(not 0 <= i < space.rank for i in idx):
                raise DimensionMismatchError(f"Index {idx} does not fit the tensor")
            if not _is_zero(value):
                self.comps[tuple(idx)] = value

    @property
    def valence(self) -> Tuple[int, int]:
        return (self.slots.count("up"), self.slots.count("down"))

    def component(self, idx: Sequence[int]):
        return self.comps.get(tuple(idx), TrigPoly.zero(self.m))

    def is_zero(self) -> bool:
        return not self.comps

    def __eq__(self, other):
        if not isinstance(other, TensorField):
            return NotImplemented
        return self.slots == other.slots and self.comps == other.comps

    def __add__(self, other: "TensorField") -> "TensorField":
        if self.slots != other.slots:
            raise DimensionMismatchError("Tensors of different valence")
        comps = dict(self.comps)
        for key, value in other.comps.items():
            comps[key] = comps[key] + value if key in comps else value
        return TensorField(self.space, self.m, self.slots, comps)

    def __neg__(self) -> "TensorField":
        return TensorField(self.space, self.m, self.slots, {k: -v for k, v in self.comps.items()})

    def __sub__(self, other: "TensorField") -> "TensorField":
        return self + (-other)

    def scale(self, factor) -> "TensorField":
        return TensorField(self.space, self.m, self.slots, {k: factor * v for k, v in self.comps.items()})

    def _move(self, slot: int, target: str, matrix) -> "TensorField":
        if not 0 <= slot < len(self.slots):
            raise DimensionMismatchError(f"Invalid slot {slot}")
        if self.slots[slot] == target:
            raise DimensionMismatchError(f"Slot {slot} is already {target}")
        comps: Dict[Tuple[int, ...], object] = {}
        for idx, value in self.comps.items():
            b = idx[slot]
            for a in range(self.space.rank):
                g = matrix[a][b]
                if g == 0:
                    continue
                key = idx[:slot] + (a,) + idx[slot + 1:]
                term = value * g
                comps[key] = comps[key] + term if key in comps else term
        slots = self.slots[:slot] + (target,) + self.slots[slot + 1:]
        return TensorField(self.space, self.m, slots, comps)

    def lower(self, slot: int) -> "TensorField":
        return self._move(slot, "down", self.space.gram)

    def raise_(self, slot: int) -> "TensorField":
        return self._move(slot, "up", self.space.inverse)


def lower(t: TensorField, slot: int) -> TensorField:
    return t.lower(slot)


def raise_(t: TensorField, slot: int) -> TensorField:
    return t.raise_(slot)


def skew3(t: TensorField) -> FormField:
    """Full antisymmetrization of a (0,3) tensor, normalized to fix 3-forms."""
    if t.slots != ("down", "down", "down"):
        raise DimensionMismatchError("skew3 expects a (0,3) tensor")
    comps = {}
    for idx in itertools.combinations(range(t.space.rank), 3):
        total = None
        for perm in itertools.permutations(range(3)):
            value = t.comps.get(tuple(idx[p] for p in perm))
            if value is None:
                continue
            value = value if _perm_sign(perm) > 0 else -value
            total = value if total is None else total + value
        if total is not None and not _is_zero(total):
            comps[idx] = total * Fraction(1, 6)
    return FormField(t.m, t.space.rank, 3, comps)


def is_totally_skew(t: TensorField) -> bool:
    if len(t.slots) != 3:
        return False
    for idx, value in t.comps.items():
        if len(set(idx)) < 3:
            return False
        i, j, k = idx
        if t.component((j, i, k)) != -value or t.component((i, k, j)) != -value:
            return False
    return True


# ---------------------------------------------------------------------------
# endomorphisms


class EndoField:
    """Endomorphism field: matrix[i][j] is the e_i component of A(e_j)."""

    __slots__ = ("m", "rank", "matrix")

    def __init__(self, m: int, matrix: Sequence[Sequence]):
        self.m = m
        self.rank = len(matrix)
        rows = []
        for row in matrix:
            if len(row) != self.rank:
                raise DimensionMismatchError("Endomorphism matrix is not square")
            rows.append(tuple(_lift(m, c) for c in row))
        self.matrix = tuple(rows)

    @classmethod
    def identity(cls, m: int, n: int) -> "EndoField":
        return cls(m, identity_matrix(n))

    @classmethod
    def zero(cls, m: int, n: int) -> "EndoField":
        return cls(m, [[0] * n for _ in range(n)])

    def entry(self, i: int, j: int):
        return self.matrix[i][j]

    def column(self, j: int) -> Section:
        return tuple(self.matrix[i][j] for i in range(self.rank))

    def apply(self, u: Section) -> Section:
        out = []
        for i in range(self.rank):
            total = None
            for j, uj in enumerate(u):
                a = self.matrix[i][j]
                if _is_zero(a) or _is_zero(uj):
                    continue
                term = a * uj
                total = term if total is None else total + term
            out.append(total if total is not None else _zero_like(u[0] if u else None, self.matrix[i][0]))
        return tuple(out)

    def __matmul__(self, other: "EndoField") -> "EndoField":
        n = self.rank
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                total = _zero_like(self.matrix[i][0], other.matrix[0][j])
                for k in range(n):
                    a, b = self.matrix[i][k], other.matrix[k][j]
                    if _is_zero(a) or _is_zero(b):
                        continue
                    total = total + a * b
                row.append(total)
            rows.append(row)
        return EndoField(self.m, rows)

    def __add__(self, other: "EndoField") -> "EndoField":
        return EndoField(self.m, [[a + b for a, b in zip(r, s)] for r, s in zip(self.matrix, other.matrix)])

    def __sub__(self, other: "EndoField") -> "EndoField":
        return EndoField(self.m, [[a - b for a, b in zip(r, s)] for r, s in zip(self.matrix, other.matrix)])

    def __neg__(self) -> "EndoField":
        return EndoField(self.m, [[-a for a in r] for r in self.matrix])

    def scale(self, factor) -> "EndoField":
        return EndoField(self.m, [[factor * a for a in r] for r in self.matrix])

    def transpose(self) -> "EndoField":
        return EndoField(self.m, [list(col) for col in zip(*self.matrix)])

    def adjoint(self, space: QuadSpace) -> "EndoField":
        """Metric adjoint G^{-1} A^T G."""
        g = EndoField(self.m, space.gram)
        g_inv = EndoField(self.m, space.inverse)
        return g_inv @ self.transpose() @ g

    def lowered(self, space: QuadSpace) -> List[List]:
        """a_kl = <A e_k, e_l>."""
        n = self.rank
        return [[sum((self.matrix[i][k] * space.gram[i][l] for i in range(n) if space.gram[i][l]),
                     TrigPoly.zero(self.m)) for l in range(n)] for k in range(n)]

    def is_skew(self, space: QuadSpace) -> bool:
        low = self.lowered(space)
        return all(low[k][l] + low[l][k] == 0 for k in range(self.rank) for l in range(self.rank))

    def is_zero(self) -> bool:
        return all(_is_zero(a) for row in self.matrix for a in row)

    def is_constant(self) -> bool:
        return all(a.is_constant() for row in self.matrix for a in row)

    def constant_matrix(self) -> List[List[Fraction]]:
        if not self.is_constant():
            raise PreconditionError("Endomorphism field is not constant")
        return [[a.constant_term() for a in row] for row in self.matrix]

    def commutator(self, other: "EndoField") -> "EndoField":
        return self @ other - other @ self

    def anticommutator(self, other: "EndoField") -> "EndoField":
        return self @ other + other @ self

    def __eq__(self, other):
        if not isinstance(other, EndoField):
            return NotImplemented
        return self.matrix == other.matrix

    def __hash__(self):
        return hash(self.matrix)

    def __repr__(self):
        return f"EndoField(rank={self.rank})"

    def to_json(self) -> list:
        return [[a.to_json() for a in row] for row in self.matrix]


def _lift(m: int, value):
    if isinstance(value, (TrigPoly, ComplexPoly)):
        return value
    return TrigPoly.constant(m, value)


def bivector_as_endo(b: FormField, space: QuadSpace) -> EndoField:
    """(e_i ^ e_j)(v) = <e_i, v> e_j - <e_j, v> e_i, extended linearly."""
    if b.degree != 2:
        raise DimensionMismatchError("bivector_as_endo expects a degree-2 form")
    n = space.rank
    cols: List[List] = [[TrigPoly.zero(b.m) for _ in range(n)] for _ in range(n)]
    for (i, j), value in b.comps.items():
        for c in range(n):
            if space.gram[i][c]:
                cols[j][c] = cols[j][c] + value * space.gram[i][c]
            if space.gram[j][c]:
                cols[i][c] = cols[i][c] - value * space.gram[j][c]
    return EndoField(b.m, cols)


def constant_endo(m: int, matrix: Iterable[Iterable]) -> EndoField:
    return EndoField(m, [[to_rat(c) for c in row] for row in matrix])


def exterior_derivative(form: FormField) -> FormField:
    """d of a coordinate form on the torus (frame dtheta_1, ..., dtheta_m)."""
    if form.rank != form.m:
        raise DimensionMismatchError("exterior_derivative needs a form on the coordinate coframe")
    comps: Dict[Tuple[int, ...], object] = {}
    for key, value in form.comps.items():
        for i in range(form.m):
            if i in key:
                continue
            derivative = value.derive(i)
            if derivative.is_zero():
                continue
            comps_key = (i,) + key
            comps[comps_key] = comps[comps_key] + derivative if comps_key in comps else derivative
    return FormField(form.m, form.rank, form.degree + 1, comps)
