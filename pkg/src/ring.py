"""
Exact coefficient rings: rationals and trigonometric polynomials on flat tori.

A TrigPoly on T^m is a finite rational combination of cos(k.theta) and
sin(k.theta) for integer frequency vectors k. Coordinates are angles, so
derivatives stay rational and every field formula stays inside the ring.
"""

from __future__ import annotations

import functools
import itertools
import re
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import sympy

from src.utils.errors import DimensionMismatchError, MalformedInputError, PreconditionError

Rat = Fraction
Key = Tuple[str, Tuple[int, ...]]
Scalar = Union[int, Fraction]

_RAT_PATTERN = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+))?\s*$")

# cos and sin of n*pi/2 for n mod 4
_COS_QUARTER = (1, 0, -1, 0)
_SIN_QUARTER = (0, 1, 0, -1)


def to_rat(value) -> Fraction:
    """Parse an int, Fraction or "p/q" string into a reduced rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise MalformedInputError(f"Not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        match = _RAT_PATTERN.match(value)
        if not match:
            raise MalformedInputError(f"Not a rational: {value!r}")
        num, den = match.group(1), match.group(2) or "1"
        if int(den) == 0:
            raise MalformedInputError(f"Zero denominator in {value!r}")
        return Fraction(int(num), int(den))
    raise MalformedInputError(f"Not a rational: {value!r}")


def rat_str(value: Fraction) -> str:
    """Render a rational as "p/q" (or "p" for integers)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _canonical(kind: str, k: Tuple[int, ...], coef: Fraction) -> Optional[Tuple[Key, Fraction]]:
    for entry in k:
        if entry != 0:
            if entry < 0:
                k = tuple(-x for x in k)
                if kind == "sin":
                    coef = -coef
            return (kind, k), coef
    if kind == "sin":
        return None
    return ("cos", k), coef


def _accumulate(terms: Dict[Key, Fraction], kind: str, k: Tuple[int, ...], coef: Fraction) -> None:
    if coef == 0:
        return
    normal = _canonical(kind, k, coef)
    if normal is None:
        return
    key, coef = normal
    total = terms.get(key, 0) + coef
    if total == 0:
        terms.pop(key, None)
    else:
        terms[key] = total


class TrigPoly:
    """Trigonometric polynomial with rational coefficients on T^m."""

    __slots__ = ("m", "terms", "_hash")

    def __init__(self, m: int, terms: Optional[Dict[Key, Scalar]] = None):
        if m < 0:
            raise DimensionMismatchError(f"Negative torus dimension {m}")
        self.m = m
        self._hash = None
        clean: Dict[Key, Fraction] = {}
        for (kind, k), coef in (terms or {}).items():
            if kind not in ("cos", "sin"):
                raise MalformedInputError(f"Unknown term kind {kind!r}")
            k = tuple(int(x) for x in k)
            if len(k) != m:
                raise DimensionMismatchError(
                    f"Frequency {k} does not live on T^{m}")
            _accumulate(clean, kind, k, to_rat(coef))
        self.terms = clean

    @classmethod
    def _raw(cls, m: int, terms: Dict[Key, Fraction]) -> "TrigPoly":
        poly = cls.__new__(cls)
        poly.m = m
        poly.terms = terms
        poly._hash = None
        return poly

    # constructors

    @classmethod
    def zero(cls, m: int) -> "TrigPoly":
        return cls._raw(m, {})

    @classmethod
    def constant(cls, m: int, value: Scalar) -> "TrigPoly":
        value = to_rat(value)
        if value == 0:
            return cls._raw(m, {})
        return cls._raw(m, {("cos", (0,) * m): value})

    @classmethod
    def one(cls, m: int) -> "TrigPoly":
        return cls.constant(m, 1)

    @classmethod
    def cos(cls, m: int, k: Sequence[int], coef: Scalar = 1) -> "TrigPoly":
        terms: Dict[Key, Fraction] = {}
        _accumulate(terms, "cos", tuple(k), to_rat(coef))
        return cls._raw(m, terms)

    @classmethod
    def sin(cls, m: int, k: Sequence[int], coef: Scalar = 1) -> "TrigPoly":
        terms: Dict[Key, Fraction] = {}
        _accumulate(terms, "sin", tuple(k), to_rat(coef))
        return cls._raw(m, terms)

    @classmethod
    def cos_theta(cls, m: int, i: int) -> "TrigPoly":
        """cos(theta_i) on T^m."""
        return cls.cos(m, unit_frequency(m, i))

    @classmethod
    def sin_theta(cls, m: int, i: int) -> "TrigPoly":
        """sin(theta_i) on T^m."""
        return cls.sin(m, unit_frequency(m, i))

    # queries

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(k) for (_, k) in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get(("cos", (0,) * self.m), Fraction(0))

    def degree(self) -> int:
        """Max sup-norm of the frequencies; 0 for constants and for 0."""
        return max((max((abs(x) for x in k), default=0) for (_, k) in self.terms), default=0)

    def active_coordinates(self) -> set:
        return {i for (_, k) in self.terms for i, x in enumerate(k) if x != 0}

    def coefficient(self, kind: str, k: Sequence[int]) -> Fraction:
        normal = _canonical(kind, tuple(k), Fraction(1))
        if normal is None:
            return Fraction(0)
        key, sign = normal
        return sign * self.terms.get(key, Fraction(0))

    # arithmetic

    def _coerce(self, other) -> Optional["TrigPoly"]:
        if isinstance(other, TrigPoly):
            if other.m != self.m:
                raise DimensionMismatchError(
                    f"Torus dimensions differ: {self.m} vs {other.m}")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return TrigPoly.constant(self.m, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        terms = dict(self.terms)
        for key, coef in other.terms.items():
            total = terms.get(key, 0) + coef
            if total == 0:
                terms.pop(key, None)
            else:
                terms[key] = total
        return TrigPoly._raw(self.m, terms)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly._raw(self.m, {key: -c for key, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def scale(self, factor: Scalar) -> "TrigPoly":
        factor = to_rat(factor)
        if factor == 0:
            return TrigPoly._raw(self.m, {})
        return TrigPoly._raw(self.m, {key: c * factor for key, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not self.terms or not other.terms:
            return TrigPoly._raw(self.m, {})
        zero_k = (0,) * self.m
        terms: Dict[Key, Fraction] = {}
        for (kind_a, ka), ca in self.terms.items():
            for (kind_b, kb), cb in other.terms.items():
                coef = ca * cb
                if ka == zero_k:
                    _accumulate(terms, kind_b, kb, coef)
                    continue
                if kb == zero_k:
                    _accumulate(terms, kind_a, ka, coef)
                    continue
                half = coef / 2
                k_plus = tuple(x + y for x, y in zip(ka, kb))
                k_minus = tuple(x - y for x, y in zip(ka, kb))
                if kind_a == "cos" and kind_b == "cos":
                    _accumulate(terms, "cos", k_minus, half)
                    _accumulate(terms, "cos", k_plus, half)
                elif kind_a == "sin" and kind_b == "sin":
                    _accumulate(terms, "cos", k_minus, half)
                    _accumulate(terms, "cos", k_plus, -half)
                elif kind_a == "sin":
                    _accumulate(terms, "sin", k_plus, half)
                    _accumulate(terms, "sin", k_minus, half)
                else:
                    _accumulate(terms, "sin", k_plus, half)
                    _accumulate(terms, "sin", k_minus, -half)
        return TrigPoly._raw(self.m, terms)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "TrigPoly":
        result = TrigPoly.one(self.m)
        for _ in range(exponent):
            result = result * self
        return result

    def derive(self, i: int) -> "TrigPoly":
        """Partial derivative in theta_i."""
        if not 0 <= i < self.m:
            raise DimensionMismatchError(
                f"Coordinate index {i} out of range for T^{self.m}")
        terms: Dict[Key, Fraction] = {}
        for (kind, k), coef in self.terms.items():
            if k[i] == 0:
                continue
            if kind == "cos":
                terms[("sin", k)] = -k[i] * coef
            else:
                terms[("cos", k)] = k[i] * coef
        return TrigPoly._raw(self.m, terms)

    def evaluate(self, point: Sequence) -> Fraction:
        """Exact value at a point of the quarter-turn grid.

        Each coordinate is given as a rational multiple of pi/2 and must be
        an integer multiple, so cos and sin are in {-1, 0, 1}.
        """
        if len(point) != self.m:
            raise DimensionMismatchError(
                f"Point has {len(point)} coordinates, torus has {self.m}")
        quarters = []
        for value in point:
            value = to_rat(value)
            if value.denominator != 1:
                raise PreconditionError(
                    f"Point coordinate {value}*pi/2 is off the exactly-evaluable grid")
            quarters.append(value.numerator)
        total = Fraction(0)
        for (kind, k), coef in self.terms.items():
            n = sum(x * q for x, q in zip(k, quarters)) % 4
            total += coef * (_COS_QUARTER[n] if kind == "cos" else _SIN_QUARTER[n])
        return total

    # identity

    def __eq__(self, other):
        if isinstance(other, TrigPoly):
            return self.m == other.m and self.terms == other.terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.terms == TrigPoly.constant(self.m, other).terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.m, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        return f"TrigPoly({self.m}, {str(self)!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (kind, k), coef in sorted(self.terms.items(), key=lambda kv: (max(map(abs, kv[0][1]), default=0), kv[0])):
            if not any(k):
                parts.append(rat_str(coef))
                continue
            arg = "+".join(
                (f"{x}" if x != 1 else "") + f"t{i + 1}" for i, x in enumerate(k) if x != 0)
            arg = arg.replace("+-", "-")
            parts.append(f"{rat_str(coef)}*{kind}({arg})")
        return " + ".join(parts)

    # serialization

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "terms": [
                {"kind": kind, "k": list(k), "c": rat_str(coef)}
                for (kind, k), coef in sorted(self.terms.items())
            ],
        }

    @classmethod
    def from_json(cls, payload) -> "TrigPoly":
        try:
            m = int(payload["m"])
            terms: Dict[Key, Fraction] = {}
            for term in payload.get("terms", []):
                _accumulate(terms, term["kind"], tuple(int(x) for x in term["k"]), to_rat(term["c"]))
            for (kind, k) in terms:
                if len(k) != m or kind not in ("cos", "sin"):
                    raise MalformedInputError(f"Bad term {kind} {k} on T^{m}")
            return cls._raw(m, terms)
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedInputError(f"Malformed TrigPoly: {e}") from e


class ComplexPoly:
    """Complexified TrigPoly stored as a (real, imaginary) pair."""

    __slots__ = ("re", "im")

    def __init__(self, re_part: TrigPoly, im_part: Optional[TrigPoly] = None):
        self.re = re_part
        self.im = im_part if im_part is not None else TrigPoly.zero(re_part.m)

    @property
    def m(self) -> int:
        return self.re.m

    @classmethod
    def zero(cls, m: int) -> "ComplexPoly":
        return cls(TrigPoly.zero(m), TrigPoly.zero(m))

    @classmethod
    def i(cls, m: int) -> "ComplexPoly":
        return cls(TrigPoly.zero(m), TrigPoly.one(m))

    def _coerce(self, other) -> Optional["ComplexPoly"]:
        if isinstance(other, ComplexPoly):
            return other
        if isinstance(other, TrigPoly):
            return ComplexPoly(other, TrigPoly.zero(other.m))
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return ComplexPoly(TrigPoly.constant(self.m, other))
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return ComplexPoly(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return ComplexPoly(-self.re, -self.im)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return ComplexPoly(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return ComplexPoly(self.re.scale(other), self.im.scale(other))
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.im.is_zero():
            return ComplexPoly(self.re * other.re, self.im * other.re)
        return ComplexPoly(self.re * other.re - self.im * other.im,
                           self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def conjugate(self) -> "ComplexPoly":
        return ComplexPoly(self.re, -self.im)

    def derive(self, i: int) -> "ComplexPoly":
        return ComplexPoly(self.re.derive(i), self.im.derive(i))

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()

    def is_constant(self) -> bool:
        return self.re.is_constant() and self.im.is_constant()

    def degree(self) -> int:
        return max(self.re.degree(), self.im.degree())

    def active_coordinates(self) -> set:
        return self.re.active_coordinates() | self.im.active_coordinates()

    def evaluate(self, point: Sequence) -> Tuple[Fraction, Fraction]:
        return self.re.evaluate(point), self.im.evaluate(point)

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"ComplexPoly({self.re}, {self.im})"

    def to_json(self) -> dict:
        return {"re": self.re.to_json(), "im": self.im.to_json()}


def unit_frequency(m: int, i: int, scale: int = 1) -> Tuple[int, ...]:
    if not 0 <= i < m:
        raise DimensionMismatchError(f"Coordinate index {i} out of range for T^{m}")
    return tuple(scale if j == i else 0 for j in range(m))


def tp_add(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    _check_dims(a, b)
    return a + b


def tp_mul(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    _check_dims(a, b)
    return a * b


def tp_derive(a: TrigPoly, i: int) -> TrigPoly:
    return a.derive(i)


def tp_eval(a: TrigPoly, point: Sequence) -> Fraction:
    return a.evaluate(point)


def _check_dims(a: TrigPoly, b: TrigPoly) -> None:
    if a.m != b.m:
        raise DimensionMismatchError(f"Torus dimensions differ: {a.m} vs {b.m}")


def multipliers(m: int) -> List[TrigPoly]:
    """The test multipliers {1, cos theta_i, sin theta_i}."""
    result = [TrigPoly.one(m)]
    for i in range(m):
        result.append(TrigPoly.cos_theta(m, i))
        result.append(TrigPoly.sin_theta(m, i))
    return result


def grid_points(m: int) -> Iterator[Tuple[int, ...]]:
    """All points of {0, pi/2, pi, 3pi/2}^m in quarter-turn units."""
    return itertools.product(range(4), repeat=m)


def monomials(m: int, degree: int, coordinates: Optional[Iterable[int]] = None) -> List[TrigPoly]:
    """Canonical trig monomials with sup-norm <= degree, supported on the given coordinates."""
    coords = sorted(set(range(m) if coordinates is None else coordinates))
    result = [TrigPoly.one(m)]
    for values in itertools.product(range(-degree, degree + 1), repeat=len(coords)):
        k = [0] * m
        for i, x in zip(coords, values):
            k[i] = x
        k = tuple(k)
        first = next((x for x in k if x != 0), 0)
        if first <= 0:
            continue
        result.append(TrigPoly.cos(m, k))
        result.append(TrigPoly.sin(m, k))
    return result


# ---------------------------------------------------------------------------
# Laurent view: z_i = exp(i theta_i)


def _sympy_rat(value: Fraction) -> sympy.Rational:
    return sympy.Rational(value.numerator, value.denominator)


def _rat_from_sympy(value) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def to_laurent(value: ComplexPoly, zs: Sequence[sympy.Symbol]) -> sympy.Expr:
    """value as a Laurent polynomial in z_i with Gaussian rational coefficients."""
    total = sympy.Integer(0)
    for part, factor in ((value.re, sympy.Integer(1)), (value.im, sympy.I)):
        for (kind, k), coef in part.terms.items():
            up = sympy.Mul(*[z ** e for z, e in zip(zs, k)])
            c = _sympy_rat(coef) * factor
            if kind == "cos":
                total += c * (up + 1 / up) / 2
            else:
                total += c * (up - 1 / up) / (2 * sympy.I)
    return sympy.expand(total)


def from_laurent(poly: sympy.Poly, m: int, shift: Sequence[int]) -> ComplexPoly:
    """Inverse of to_laurent after multiplying by z^(-shift)."""
    re_part, im_part = TrigPoly.zero(m), TrigPoly.zero(m)
    if poly.is_zero:
        return ComplexPoly(re_part, im_part)
    for monom, coef in poly.terms():
        k = tuple(e - s for e, s in zip(monom, shift))
        a, b = (_rat_from_sympy(x) for x in sympy.sympify(coef).as_real_imag())
        re_part = re_part + TrigPoly.cos(m, k, a) - TrigPoly.sin(m, k, b)
        im_part = im_part + TrigPoly.sin(m, k, a) + TrigPoly.cos(m, k, b)
    return ComplexPoly(re_part, im_part)


def strip_common_factor(values: Sequence[ComplexPoly]) -> List[ComplexPoly]:
    """Divide the values by their gcd as Laurent polynomials over Q(i).

    Exponents are recentred per coordinate, so real trig polynomials with a
    common real factor come back real up to a constant.
    """
    m = values[0].m
    if m == 0 or all(v.is_zero() for v in values):
        return list(values)
    zs = sympy.symbols(f"z0:{m}")
    domain = sympy.QQ.algebraic_field(sympy.I)
    bound = [max((abs(k[i]) for v in values for part in (v.re, v.im) for _, k in part.terms), default=0)
             for i in range(m)]
    lift = sympy.Mul(*[z ** d for z, d in zip(zs, bound)])
    polys = [sympy.Poly(sympy.expand(to_laurent(v, zs) * lift), *zs, domain=domain) for v in values]
    common = functools.reduce(lambda a, b: a.gcd(b), [p for p in polys if not p.is_zero])
    quotients = [p.exquo(common) for p in polys]
    shift = []
    for i in range(m):
        exps = [monom[i] for q in quotients if not q.is_zero for monom in q.monoms()]
        shift.append((min(exps) + max(exps)) // 2 if exps else 0)
    return [from_laurent(q, m, shift) for q in quotients]
