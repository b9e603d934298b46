"""
Clifford algebras, exterior-algebra spinor modules and pure spinors.

Cl(E) is built on ordered monomials e_i1...e_ik (i1 < ... < ik) of the frame,
reduced with e_i e_j = -e_j e_i + 2<e_i, e_j>; this works for any constant
gram. Spinor modules are Lambda P for a maximal isotropic pair (P, Q) with
2<p_a, q_b> = delta_ab: p_a acts by wedge, q_a by contraction.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from src.linalg import (QuadSpace, Section, _is_zero, complex_nullspace, complex_rank,
                        determinant, inverse)
from src.ring import ComplexPoly, TrigPoly, grid_points, strip_common_factor, to_rat
from src.utils.errors import (DimensionMismatchError, PreconditionError,
                              UnsupportedSignatureError)

logger = logging.getLogger(__name__)

Blade = Tuple[int, ...]


# ---------------------------------------------------------------------------
# Clifford algebra


class CliffordAlgebra:
    """Cl(E) for a QuadSpace, with memoized word normalization."""

    def __init__(self, space: QuadSpace):
        self.space = space
        self.rank = space.rank
        self._reduce = lru_cache(maxsize=None)(self._reduce_word)

    def _reduce_word(self, word: Tuple[int, ...]) -> Tuple[Tuple[Blade, Fraction], ...]:
        for pos in range(len(word) - 1):
            i, j = word[pos], word[pos + 1]
            if i < j:
                continue
            rest = word[:pos] + word[pos + 2:]
            result: Dict[Blade, Fraction] = {}
            if i == j:
                g = self.space.gram[i][i]
                if g:
                    _merge(result, self._reduce(rest), g)
                return tuple(result.items())
            swapped = word[:pos] + (j, i) + word[pos + 2:]
            _merge(result, self._reduce(swapped), Fraction(-1))
            g = self.space.gram[i][j]
            if g:
                _merge(result, self._reduce(rest), 2 * g)
            return tuple(result.items())
        return ((word, Fraction(1)),)

    def blade_product(self, a: Blade, b: Blade) -> Tuple[Tuple[Blade, Fraction], ...]:
        return self._reduce(a + b)

    def scalar(self, value) -> "CliffordElement":
        return CliffordElement(self, {(): value})

    def vector(self, section: Sequence) -> "CliffordElement":
        return CliffordElement(self, {(a,): c for a, c in enumerate(section)})

    def frame_vector(self, a: int) -> "CliffordElement":
        return CliffordElement(self, {(a,): Fraction(1)})

    def dual_vector(self, a: int) -> "CliffordElement":
        """Metric dual frame vector e~_a."""
        return self.vector(self.space.dual_vector(a))

    def product(self, *factors: "CliffordElement") -> "CliffordElement":
        result = self.scalar(Fraction(1))
        for factor in factors:
            result = result * factor
        return result


def _merge(target: Dict, items: Iterable, factor) -> None:
    for key, value in items:
        total = target.get(key, 0) + factor * value
        if _is_zero(total):
            target.pop(key, None)
        else:
            target[key] = total


class CliffordElement:
    """Element of Cl(E) with Rat or TrigPoly coefficients on ordered blades."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra: CliffordAlgebra, coeffs: Optional[Dict[Blade, object]] = None):
        self.algebra = algebra
        self.coeffs = {}
        for blade, value in (coeffs or {}).items():
            blade = tuple(blade)
            if any(x >= y for x, y in zip(blade, blade[1:])):
                raise DimensionMismatchError(f"Blade {blade} is not strictly increasing")
            if not _is_zero(value):
                self.coeffs[blade] = value

    def _check(self, other: "CliffordElement") -> None:
        if self.algebra.space != other.algebra.space:
            raise DimensionMismatchError("Clifford elements of different algebras")

    def __add__(self, other: "CliffordElement") -> "CliffordElement":
        self._check(other)
        coeffs = dict(self.coeffs)
        _merge(coeffs, other.coeffs.items(), 1)
        return CliffordElement(self.algebra, coeffs)

    def __neg__(self) -> "CliffordElement":
        return CliffordElement(self.algebra, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "CliffordElement") -> "CliffordElement":
        return self + (-other)

    def scale(self, factor) -> "CliffordElement":
        return CliffordElement(self.algebra, {k: factor * v for k, v in self.coeffs.items()})

    def __mul__(self, other: "CliffordElement") -> "CliffordElement":
        self._check(other)
        coeffs: Dict[Blade, object] = {}
        for a, ca in self.coeffs.items():
            for b, cb in other.coeffs.items():
                _merge(coeffs, self.algebra.blade_product(a, b), ca * cb)
        return CliffordElement(self.algebra, coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def parity(self) -> Optional[int]:
        """Z2-degree if homogeneous, else None."""
        parities = {len(b) % 2 for b in self.coeffs}
        if not parities:
            return 0
        return parities.pop() if len(parities) == 1 else None

    def __eq__(self, other):
        if not isinstance(other, CliffordElement):
            return NotImplemented
        return self.algebra.space == other.algebra.space and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __repr__(self):
        return f"CliffordElement({self.coeffs})"

    def to_json(self) -> list:
        return [{"blade": list(b), "value": _coef_json(v)} for b, v in sorted(self.coeffs.items())]


def cl_mul(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    return a * b


def _coef_json(value):
    if isinstance(value, Fraction):
        from src.ring import rat_str
        return rat_str(value)
    return value.to_json()


def three_form_element(algebra: CliffordAlgebra, form) -> CliffordElement:
    """(1/6) sum T_ijk e~_i e~_j e~_k for a 3-form given in the frame."""
    duals = [algebra.dual_vector(a) for a in range(algebra.rank)]
    result = CliffordElement(algebra)
    for (i, j, k), value in form.comps.items():
        # the antisymmetrized sum over the 6 orderings, divided by 6
        term = CliffordElement(algebra)
        for perm, sign in _PERMS3:
            idx = ((i, j, k)[perm[0]], (i, j, k)[perm[1]], (i, j, k)[perm[2]])
            product = duals[idx[0]] * duals[idx[1]] * duals[idx[2]]
            term = term + (product if sign > 0 else -product)
        result = result + term.scale(value * Fraction(1, 6))
    return result


_PERMS3 = (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
           ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1))


# ---------------------------------------------------------------------------
# sparse matrices on spinor modules


class SpinorMatrix:
    """Sparse square matrix: cols[j][i] is the (i, j) entry."""

    __slots__ = ("dim", "cols")

    def __init__(self, dim: int, cols: Optional[Dict[int, Dict[int, object]]] = None):
        self.dim = dim
        self.cols = {}
        for j, col in (cols or {}).items():
            clean = {i: v for i, v in col.items() if not _is_zero(v)}
            if clean:
                self.cols[j] = clean

    @classmethod
    def identity(cls, dim: int, one=Fraction(1)) -> "SpinorMatrix":
        return cls(dim, {j: {j: one} for j in range(dim)})

    @classmethod
    def zero(cls, dim: int) -> "SpinorMatrix":
        return cls(dim)

    def entry(self, i: int, j: int):
        return self.cols.get(j, {}).get(i, Fraction(0))

    def __matmul__(self, other: "SpinorMatrix") -> "SpinorMatrix":
        out: Dict[int, Dict[int, object]] = {}
        for j, col in other.cols.items():
            target: Dict[int, object] = {}
            for k, b in col.items():
                for i, a in self.cols.get(k, {}).items():
                    term = a * b
                    target[i] = target[i] + term if i in target else term
            out[j] = target
        return SpinorMatrix(self.dim, out)

    def __add__(self, other: "SpinorMatrix") -> "SpinorMatrix":
        out = {j: dict(col) for j, col in self.cols.items()}
        for j, col in other.cols.items():
            target = out.setdefault(j, {})
            for i, v in col.items():
                target[i] = target[i] + v if i in target else v
        return SpinorMatrix(self.dim, out)

    def __neg__(self) -> "SpinorMatrix":
        return SpinorMatrix(self.dim, {j: {i: -v for i, v in col.items()} for j, col in self.cols.items()})

    def __sub__(self, other: "SpinorMatrix") -> "SpinorMatrix":
        return self + (-other)

    def scale(self, factor) -> "SpinorMatrix":
        if _is_zero(factor):
            return SpinorMatrix(self.dim)
        return SpinorMatrix(self.dim, {j: {i: factor * v for i, v in col.items()} for j, col in self.cols.items()})

    def derive(self, i: int) -> "SpinorMatrix":
        out = {}
        for j, col in self.cols.items():
            out[j] = {r: v.derive(i) for r, v in col.items() if not isinstance(v, (int, Fraction))}
        return SpinorMatrix(self.dim, out)

    def apply(self, vec: Dict[int, object]) -> Dict[int, object]:
        out: Dict[int, object] = {}
        for j, s in vec.items():
            if _is_zero(s):
                continue
            for i, a in self.cols.get(j, {}).items():
                term = a * s
                out[i] = out[i] + term if i in out else term
        return {i: v for i, v in out.items() if not _is_zero(v)}

    def is_zero(self) -> bool:
        return not self.cols

    def scalar_value(self):
        """The f with self == f * Id, or None."""
        value = None
        for j in range(self.dim):
            col = self.cols.get(j, {})
            if any(i != j for i in col):
                return None
            entry = col.get(j, Fraction(0))
            if value is None:
                value = entry
            elif not _is_zero(value - entry):
                return None
        return value if value is not None else Fraction(0)

    def __eq__(self, other):
        if not isinstance(other, SpinorMatrix):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(self.dim)

    def __repr__(self):
        return f"SpinorMatrix(dim={self.dim}, nnz={sum(len(c) for c in self.cols.values())})"


class Spinor:
    """Element of a spinor module carrier: basis index (bitmask) -> coefficient."""

    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs: Optional[Dict[int, object]] = None):
        self.dim = dim
        self.coeffs = {i: v for i, v in (coeffs or {}).items() if not _is_zero(v)}

    def __add__(self, other: "Spinor") -> "Spinor":
        out = dict(self.coeffs)
        for i, v in other.coeffs.items():
            out[i] = out[i] + v if i in out else v
        return Spinor(self.dim, out)

    def __neg__(self) -> "Spinor":
        return Spinor(self.dim, {i: -v for i, v in self.coeffs.items()})

    def __sub__(self, other: "Spinor") -> "Spinor":
        return self + (-other)

    def scale(self, factor) -> "Spinor":
        return Spinor(self.dim, {i: factor * v for i, v in self.coeffs.items()})

    def is_zero(self) -> bool:
        return not self.coeffs

    def chirality(self) -> Optional[int]:
        parities = {bin(i).count("1") % 2 for i in self.coeffs}
        return parities.pop() if len(parities) == 1 else None

    def degree(self) -> int:
        return max((v.degree() for v in self.coeffs.values() if not isinstance(v, (int, Fraction))), default=0)

    def active_coordinates(self) -> set:
        out = set()
        for v in self.coeffs.values():
            if not isinstance(v, (int, Fraction)):
                out |= v.active_coordinates()
        return out

    def leading(self) -> Tuple[Optional[int], object]:
        for i in sorted(self.coeffs, key=lambda b: (bin(b).count("1"), b)):
            return i, self.coeffs[i]
        return None, None

    def __eq__(self, other):
        if not isinstance(other, Spinor):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(self.dim)

    def __repr__(self):
        return f"Spinor({self.coeffs})"

    def to_json(self) -> list:
        return [{"basis": i, "value": _coef_json(v)} for i, v in sorted(self.coeffs.items())]


def _bit_sign(mask: int, a: int) -> int:
    return -1 if bin(mask & ((1 << a) - 1)).count("1") % 2 else 1


def wedge_matrix(n: int, a: int) -> SpinorMatrix:
    cols = {}
    for mask in range(1 << n):
        if not mask >> a & 1:
            cols[mask] = {mask | 1 << a: Fraction(_bit_sign(mask, a))}
    return SpinorMatrix(1 << n, cols)


def contraction_matrix(n: int, a: int) -> SpinorMatrix:
    cols = {}
    for mask in range(1 << n):
        if mask >> a & 1:
            cols[mask] = {mask ^ 1 << a: Fraction(_bit_sign(mask, a))}
    return SpinorMatrix(1 << n, cols)


# ---------------------------------------------------------------------------
# spinor modules


class SpinorModule:
    """Lambda P realised on bitmasks over a neutral QuadSpace."""

    def __init__(self, space: QuadSpace, p: Sequence[Sequence], q: Sequence[Sequence], m: int = 0):
        if not space.is_neutral():
            raise UnsupportedSignatureError(
                f"Spinor modules need a neutral scalar product, got signature {space.signature}")
        self.space = space
        self.m = m
        self.n = space.rank // 2
        self.p = [tuple(to_rat(c) for c in v) for v in p]
        self.q = [tuple(to_rat(c) for c in v) for v in q]
        if len(self.p) != self.n or len(self.q) != self.n:
            raise DimensionMismatchError(f"Need {self.n} isotropic generators on each side")
        for a in range(self.n):
            for b in range(self.n):
                if space.pair_const(self.p[a], self.p[b]) or space.pair_const(self.q[a], self.q[b]):
                    raise PreconditionError("Spinor planes are not isotropic")
                if 2 * space.pair_const(self.p[a], self.q[b]) != (1 if a == b else 0):
                    raise PreconditionError("Spinor planes are not in duality 2<p_a, q_b> = delta_ab")
        self.dim = 1 << self.n
        wedges = [wedge_matrix(self.n, a) for a in range(self.n)]
        contractions = [contraction_matrix(self.n, a) for a in range(self.n)]
        self.generators: List[SpinorMatrix] = []
        for c in range(space.rank):
            e = [Fraction(int(i == c)) for i in range(space.rank)]
            matrix = SpinorMatrix(self.dim)
            for a in range(self.n):
                x = 2 * space.pair_const(e, self.q[a])
                y = 2 * space.pair_const(e, self.p[a])
                if x:
                    matrix = matrix + wedges[a].scale(x)
                if y:
                    matrix = matrix + contractions[a].scale(y)
            self.generators.append(matrix)
        self.dual_generators = [self._combine(space.dual_vector(c)) for c in range(space.rank)]
        self._pairs: Dict[Tuple[int, int], SpinorMatrix] = {}

    @classmethod
    def auto(cls, space: QuadSpace, m: int = 0) -> "SpinorModule":
        p, q = rational_isotropic_pair(space)
        return cls(space, p, q, m)

    def _combine(self, vector: Sequence) -> SpinorMatrix:
        matrix = SpinorMatrix(self.dim)
        for c, x in enumerate(vector):
            if not _is_zero(x):
                matrix = matrix + self.generators[c].scale(x)
        return matrix

    def gamma_section(self, v: Section) -> SpinorMatrix:
        """Clifford action matrix of a section with ring coefficients."""
        return self._combine(v)

    def dual_pair(self, b: int, c: int) -> SpinorMatrix:
        """gamma(e~_b) gamma(e~_c), cached."""
        key = (b, c)
        if key not in self._pairs:
            self._pairs[key] = self.dual_generators[b] @ self.dual_generators[c]
        return self._pairs[key]

    def clifford_matrix(self, element: CliffordElement) -> SpinorMatrix:
        if element.algebra.space != self.space:
            raise DimensionMismatchError("Clifford element and module live on different spaces")
        total = SpinorMatrix(self.dim)
        for blade, coef in element.coeffs.items():
            matrix = SpinorMatrix.identity(self.dim)
            for a in blade:
                matrix = matrix @ self.generators[a]
            total = total + matrix.scale(coef)
        return total

    def gamma(self, element: CliffordElement, s: Spinor) -> Spinor:
        if s.dim != self.dim:
            raise DimensionMismatchError("Spinor does not belong to this module")
        out = Spinor(self.dim)
        for blade, coef in element.coeffs.items():
            vec = dict(s.coeffs)
            for a in reversed(blade):
                vec = self.generators[a].apply(vec)
            out = out + Spinor(self.dim, vec).scale(coef)
        return out

    def apply(self, matrix: SpinorMatrix, s: Spinor) -> Spinor:
        return Spinor(self.dim, matrix.apply(s.coeffs))

    def basis_spinor(self, mask: int, coef=None) -> Spinor:
        return Spinor(self.dim, {mask: coef if coef is not None else TrigPoly.one(self.m)})

    def volume_matrix(self) -> SpinorMatrix:
        """gamma of the volume element normalized to square to 1.

        The orientation is that of the frame order: omega is a positive
        multiple of e_1 ^ ... ^ e_N.
        """
        diag = self.space.diagonal
        vecs = self.space.diagonal_basis
        product = Fraction(1)
        for d in diag:
            product *= d
        norm = abs(product)
        root = _rational_sqrt(norm)
        if root is None:
            raise UnsupportedSignatureError(
                f"Volume element cannot be normalized over Q (|prod d| = {norm})")
        # e_1 ^ ... ^ e_N = det(C) f_1 ^ ... ^ f_N where e_i = sum_j C_ij f_j
        change = inverse(vecs)
        det = determinant(change)
        matrix = SpinorMatrix.identity(self.dim)
        for v in vecs:
            matrix = matrix @ self._combine(v)
        sign = 1 if det > 0 else -1
        omega = matrix.scale(Fraction(sign) / root)
        if omega @ omega != SpinorMatrix.identity(self.dim):
            raise UnsupportedSignatureError("Volume element does not square to 1")
        return omega


def _rational_sqrt(value: Fraction) -> Optional[Fraction]:
    value = Fraction(value)
    if value < 0:
        return None
    num, den = math.isqrt(value.numerator), math.isqrt(value.denominator)
    if num * num == value.numerator and den * den == value.denominator:
        return Fraction(num, den)
    return None


def rational_isotropic_pair(space: QuadSpace) -> Tuple[List[List[Fraction]], List[List[Fraction]]]:
    """Pair positive and negative diagonal directions into null planes.

    d_i > 0 pairs with d_j < 0 when d_i / (-d_j) = c^2 is a rational square;
    p = f_i + c f_j and q = (f_i - c f_j) / (4 d_i).
    """
    if not space.is_neutral():
        raise UnsupportedSignatureError(f"Signature {space.signature} is not neutral")
    diag = space.diagonal
    vecs = space.diagonal_basis
    positives = [i for i, d in enumerate(diag) if d > 0]
    negatives = [j for j, d in enumerate(diag) if d < 0]
    p, q = [], []
    used = set()
    for i in positives:
        for j in negatives:
            if j in used:
                continue
            c = _rational_sqrt(diag[i] / -diag[j])
            if c is None:
                continue
            used.add(j)
            p.append([x + c * y for x, y in zip(vecs[i], vecs[j])])
            q.append([(x - c * y) / (4 * diag[i]) for x, y in zip(vecs[i], vecs[j])])
            break
        else:
            raise UnsupportedSignatureError(
                "No rational isotropic pairing; give spinor.p and spinor.q explicitly")
    return p, q


def gamma(module: SpinorModule, element: CliffordElement, s: Spinor) -> Spinor:
    return module.gamma(element, s)


def grading_split(module: SpinorModule) -> Tuple[SpinorMatrix, SpinorMatrix]:
    """Projectors onto S0 = 1/2 (1 + omega) S and S1 = 1/2 (1 - omega) S."""
    omega = module.volume_matrix()
    identity = SpinorMatrix.identity(module.dim)
    half = Fraction(1, 2)
    return (identity + omega).scale(half), (identity - omega).scale(half)


# ---------------------------------------------------------------------------
# graded tensor products


class GradedTensorModule:
    """S+ (x) S- over Cl(E+) (x) Cl(E-) with the Koszul sign."""

    def __init__(self, plus: SpinorModule, minus: SpinorModule):
        self.plus = plus
        self.minus = minus
        self.dim = plus.dim * minus.dim

    def index(self, b_plus: int, b_minus: int) -> int:
        return b_plus | (b_minus << self.plus.n)

    def split(self, index: int) -> Tuple[int, int]:
        return index & (self.plus.dim - 1), index >> self.plus.n

    def graded_action(self, v_plus: Section, v_minus: Section, s: Spinor) -> Spinor:
        g_plus = self.plus.gamma_section(v_plus)
        g_minus = self.minus.gamma_section(v_minus)
        out: Dict[int, object] = {}
        for idx, coef in s.coeffs.items():
            bp, bm = self.split(idx)
            for row, value in g_plus.apply({bp: coef}).items():
                key = self.index(row, bm)
                out[key] = out[key] + value if key in out else value
            sign = -1 if bin(bp).count("1") % 2 else 1
            for row, value in g_minus.apply({bm: coef}).items():
                key = self.index(bp, row)
                value = value if sign > 0 else -value
                out[key] = out[key] + value if key in out else value
        return Spinor(self.dim, out)


def graded_action(module: GradedTensorModule, v_plus: Section, v_minus: Section, s: Spinor) -> Spinor:
    return module.graded_action(v_plus, v_minus, s)


# ---------------------------------------------------------------------------
# pure spinors


def _complex_value(value, point) -> Tuple[Fraction, Fraction]:
    if isinstance(value, ComplexPoly):
        return value.evaluate(point)
    if isinstance(value, TrigPoly):
        return value.evaluate(point), Fraction(0)
    return Fraction(value), Fraction(0)


def _as_complex(value, m: int) -> ComplexPoly:
    if isinstance(value, ComplexPoly):
        return value
    if isinstance(value, TrigPoly):
        return ComplexPoly(value)
    return ComplexPoly(TrigPoly.constant(m, value))


def _annihilator_matrix(module: SpinorModule, eta: Spinor) -> List[List[ComplexPoly]]:
    columns = [module.generators[a].apply(eta.coeffs) for a in range(module.space.rank)]
    return [[_as_complex(col.get(i, Fraction(0)), module.m) for col in columns] for i in range(module.dim)]


def null_space(module: SpinorModule, eta: Spinor) -> List[Section]:
    """Basis of L_eta = {v in E_C : gamma_v eta = 0}.

    The rank is checked on the quarter-turn grid and must be constant. For
    constant coefficients the kernel is exact over Q(i); otherwise it is
    built from the adjugate of a maximal minor and verified symbolically.
    """
    if eta.is_zero():
        raise PreconditionError("null_space of the zero spinor")
    matrix = _annihilator_matrix(module, eta)
    ncols = module.space.rank
    m = module.m
    constant = all(entry.is_constant() for row in matrix for entry in row)
    points = [tuple([0] * m)] if constant else list(grid_points(m))
    ranks = set()
    for point in points:
        evaluated = [[_complex_value(x, point) for x in row] for row in matrix]
        ranks.add(complex_rank(evaluated, ncols))
    if len(ranks) != 1:
        raise PreconditionError(f"Annihilator rank is not constant over the torus: {sorted(ranks)}")
    r = ranks.pop()
    if constant:
        evaluated = [[_complex_value(x, points[0]) for x in row] for row in matrix]
        basis = complex_nullspace(evaluated, ncols)
        return [tuple(ComplexPoly(TrigPoly.constant(m, re), TrigPoly.constant(m, im)) for re, im in vec)
                for vec in basis]
    return _adjugate_kernel(matrix, r, ncols, m)


def _adjugate_kernel(matrix, r: int, ncols: int, m: int) -> List[Section]:
    point = tuple([0] * m)
    evaluated = [[_complex_value(x, point) for x in row] for row in matrix]
    rows, cols = _independent_minor(evaluated, r, ncols)
    minor = [[matrix[i][j] for j in cols] for i in rows]
    det = _poly_det(minor)
    if det.is_zero():
        raise PreconditionError("Degenerate minor while building the annihilator")
    adjugate = _poly_adjugate(minor)
    basis = []
    for k in range(ncols):
        if k in cols:
            continue
        vec = [ComplexPoly.zero(m) for _ in range(ncols)]
        vec[k] = det
        for a, j in enumerate(cols):
            total = ComplexPoly.zero(m)
            for b, i in enumerate(rows):
                total = total + adjugate[a][b] * matrix[i][k]
            vec[j] = -total
        if det.is_constant():
            inv = _complex_inverse(det.re.constant_term(), det.im.constant_term())
            vec = [x * ComplexPoly(TrigPoly.constant(m, inv[0]), TrigPoly.constant(m, inv[1])) for x in vec]
        basis.append(tuple(vec))
    for vec in basis:
        for row in matrix:
            total = ComplexPoly.zero(m)
            for x, y in zip(row, vec):
                total = total + x * y
            if not total.is_zero():
                raise PreconditionError("Annihilator frame failed symbolic verification")
    return basis


def _independent_minor(evaluated, r: int, ncols: int) -> Tuple[List[int], List[int]]:
    cols: List[int] = []
    for j in range(ncols):
        trial = cols + [j]
        sub = [[row[c] for c in trial] for row in evaluated]
        if complex_rank(sub, len(trial)) == len(trial):
            cols = trial
        if len(cols) == r:
            break
    rows: List[int] = []
    for i in range(len(evaluated)):
        trial = rows + [i]
        sub = [[evaluated[x][c] for c in cols] for x in trial]
        if complex_rank(sub, len(cols)) == len(trial):
            rows = trial
        if len(rows) == r:
            break
    return rows, cols


def _poly_det(minor):
    n = len(minor)
    if n == 0:
        return ComplexPoly(TrigPoly.one(minor[0][0].m if minor else 0))
    if n == 1:
        return minor[0][0]
    total = None
    for j in range(n):
        if minor[0][j].is_zero():
            continue
        sub = [row[:j] + row[j + 1:] for row in minor[1:]]
        term = minor[0][j] * _poly_det(sub)
        term = term if j % 2 == 0 else -term
        total = term if total is None else total + term
    return total if total is not None else ComplexPoly.zero(minor[0][0].m)


def _poly_adjugate(minor):
    n = len(minor)
    m = minor[0][0].m
    if n == 1:
        return [[ComplexPoly(TrigPoly.one(m))]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [row[:j] + row[j + 1:] for k, row in enumerate(minor) if k != i]
            cof = _poly_det(sub)
            adj[j][i] = cof if (i + j) % 2 == 0 else -cof
    return adj


def _complex_inverse(re: Fraction, im: Fraction) -> Tuple[Fraction, Fraction]:
    norm = re * re + im * im
    return re / norm, -im / norm


def is_pure(module: SpinorModule, eta: Spinor) -> bool:
    try:
        return len(null_space(module, eta)) == module.n
    except PreconditionError:
        return False


def spinor_of_isotropic(module: SpinorModule, basis: Sequence[Section]) -> Spinor:
    """Pure spinor whose annihilator is the given maximal isotropic subbundle.

    eta = gamma_{l_1} ... gamma_{l_n} s for the first basis spinor s (by
    degree, then index) giving a result that is nonzero on the whole grid.
    If every candidate vanishes somewhere, the common factor of the first
    one is divided out. The annihilator of the result is checked against
    the subbundle before returning.
    """
    space = module.space
    if len(basis) != module.n:
        raise PreconditionError(f"Maximal isotropic subbundles have rank {module.n}, got {len(basis)}")
    for u in basis:
        for v in basis:
            if not _is_zero(space.pair(u, v)):
                raise PreconditionError("Subbundle is not isotropic")
    matrices = [module.gamma_section(u) for u in basis]
    first = None
    for mask in sorted(range(module.dim), key=lambda b: (bin(b).count("1"), b)):
        vec = {mask: ComplexPoly(TrigPoly.one(module.m))}
        for matrix in reversed(matrices):
            vec = matrix.apply(vec)
        candidate = Spinor(module.dim, vec)
        if candidate.is_zero():
            continue
        if first is None:
            first = candidate
        if _nonvanishing(candidate, module.m):
            return _check_annihilator(module, basis, normalize_spinor(candidate, module.m))
    if first is None:
        raise PreconditionError("Subbundle is not maximal isotropic (no pure spinor)")
    logger.debug("Every pure spinor candidate vanishes on the grid; dividing out their common factor")
    reduced = reduce_spinor(first, module.m)
    if not _nonvanishing(reduced, module.m):
        raise PreconditionError("Subbundle has no nowhere-vanishing pure spinor with trigonometric coefficients")
    return _check_annihilator(module, basis, reduced)


def reduce_spinor(s: Spinor, m: int) -> Spinor:
    """s divided by the gcd of its coefficients, scaled to a unit leading term."""
    keys = sorted(s.coeffs)
    values = strip_common_factor([_as_complex(s.coeffs[i], m) for i in keys])
    reduced = Spinor(s.dim, dict(zip(keys, values)))
    _, lead = reduced.leading()
    key = min(set(lead.re.terms) | set(lead.im.terms))
    inv = _complex_inverse(lead.re.terms.get(key, Fraction(0)), lead.im.terms.get(key, Fraction(0)))
    return reduced.scale(ComplexPoly(TrigPoly.constant(m, inv[0]), TrigPoly.constant(m, inv[1])))


def _check_annihilator(module: SpinorModule, basis: Sequence[Section], eta: Spinor) -> Spinor:
    for u in basis:
        if not Spinor(module.dim, module.gamma_section(u).apply(eta.coeffs)).is_zero():
            raise PreconditionError("Subbundle does not annihilate its spinor")
    if not is_pure(module, eta):
        raise PreconditionError("Spinor of the subbundle is not pure")
    return eta


def _nonvanishing(s: Spinor, m: int) -> bool:
    for point in grid_points(m):
        if all(_complex_value(v, point) == (0, 0) for v in s.coeffs.values()):
            return False
    return True


def normalize_spinor(s: Spinor, m: int) -> Spinor:
    """Scale so the leading coefficient is 1 when it is constant."""
    _, lead = s.leading()
    lead = _as_complex(lead, m) if lead is not None else None
    if lead is None or not lead.is_constant():
        return s
    inv = _complex_inverse(lead.re.constant_term(), lead.im.constant_term())
    return s.scale(ComplexPoly(TrigPoly.constant(m, inv[0]), TrigPoly.constant(m, inv[1])))


def projectively_equal(a: Spinor, b: Spinor) -> bool:
    """a and b span the same line over the coefficient ring: a_i b_j = a_j b_i for all i, j."""
    if a.is_zero() or b.is_zero():
        return a.is_zero() and b.is_zero()
    if set(a.coeffs) != set(b.coeffs):
        return False
    i = next(iter(b.coeffs))
    # cross-multiplication avoids division
    for j in a.coeffs:
        if not (a.coeffs[j] * b.coeffs[i] - a.coeffs[i] * b.coeffs[j]).is_zero():
            return False
    return True
