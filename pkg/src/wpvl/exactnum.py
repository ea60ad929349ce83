"""Exact rationals graded by even powers of pi.

Every volume coefficient and normalized intersection number is a rational
multiple of ``pi**(2k)``.  A :class:`PiMonomial` holds one such term and a
:class:`PiPolynomial` holds a finite sum of them.  Arithmetic stays exact;
floating values are produced only by :func:`pi_to_float`.

Canonical text form of a monomial is ``num/den*pi^E`` with ``E = 2k`` and a
positive reduced denominator, e.g. ``2/1*pi^2``.  Polynomials join their
monomials with ``" + "`` in increasing degree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

import mpmath

Rational = Union[int, Fraction]

_MONO_RE = re.compile(r"^\s*(-?\d+)/(\d+)\*pi\^(\d+)\s*$")


def _as_fraction(x: Rational) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    # gmpy2.mpq and friends expose numerator/denominator
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return Fraction(int(x.numerator), int(x.denominator))
    raise TypeError(f"not an exact rational: {x!r}")


@dataclass(frozen=True)
class PiMonomial:
    """``coeff * pi**(2*pi2_power)`` with exact rational ``coeff``.

    Zero is canonicalised to ``pi2_power == 0``.
    """

    coeff: Fraction
    pi2_power: int = 0

    def __post_init__(self) -> None:
        c = _as_fraction(self.coeff)
        if self.pi2_power < 0:
            raise ValueError("pi2_power must be non-negative")
        object.__setattr__(self, "coeff", c)
        if c == 0:
            object.__setattr__(self, "pi2_power", 0)

    @classmethod
    def zero(cls) -> "PiMonomial":
        return cls(Fraction(0), 0)

    def is_zero(self) -> bool:
        return self.coeff == 0

    def __mul__(self, other):
        if isinstance(other, PiMonomial):
            if self.is_zero() or other.is_zero():
                return PiMonomial.zero()
            return PiMonomial(self.coeff * other.coeff, self.pi2_power + other.pi2_power)
        if isinstance(other, PiPolynomial):
            return PiPolynomial.from_monomial(self) * other
        if isinstance(other, (int, Fraction)):
            return PiMonomial(self.coeff * other, self.pi2_power)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return PiMonomial(self.coeff / _as_fraction(other), self.pi2_power)
        return NotImplemented

    def __neg__(self) -> "PiMonomial":
        return PiMonomial(-self.coeff, self.pi2_power)

    def __add__(self, other):
        return PiPolynomial.from_monomial(self) + other

    __radd__ = __add__

    def __sub__(self, other):
        return PiPolynomial.from_monomial(self) - other

    def render(self) -> str:
        return f"{self.coeff.numerator}/{self.coeff.denominator}*pi^{2 * self.pi2_power}"

    __str__ = render

    @classmethod
    def parse(cls, text: str) -> "PiMonomial":
        m = _MONO_RE.match(text)
        if m is None:
            raise ValueError(f"malformed monomial: {text!r}")
        num, den, exp = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if den == 0:
            raise ValueError("zero denominator")
        if exp % 2:
            raise ValueError("pi exponent must be even")
        return cls(Fraction(num, den), exp // 2)

    def to_float(self, precision_bits: int = 53):
        return pi_to_float(self, precision_bits)


class PiPolynomial:
    """Finite sum of :class:`PiMonomial` terms keyed by ``pi2_power``."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, Rational] | Iterable[PiMonomial] = ()):
        acc: dict[int, Fraction] = {}
        if isinstance(terms, Mapping):
            items = ((k, _as_fraction(v)) for k, v in terms.items())
        else:
            items = ((m.pi2_power, m.coeff) for m in terms)
        for k, v in items:
            if k < 0:
                raise ValueError("pi2_power must be non-negative")
            acc[k] = acc.get(k, Fraction(0)) + v
        self._terms = tuple(sorted((k, v) for k, v in acc.items() if v != 0))

    @classmethod
    def from_monomial(cls, m: PiMonomial) -> "PiPolynomial":
        return cls([m])

    @property
    def terms(self) -> tuple[PiMonomial, ...]:
        return tuple(PiMonomial(v, k) for k, v in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_monomial(self) -> bool:
        return len(self._terms) <= 1

    def as_monomial(self) -> PiMonomial:
        if not self._terms:
            return PiMonomial.zero()
        if len(self._terms) > 1:
            raise ValueError("polynomial has more than one pi-degree")
        k, v = self._terms[0]
        return PiMonomial(v, k)

    @staticmethod
    def _coerce(x) -> "PiPolynomial":
        if isinstance(x, PiPolynomial):
            return x
        if isinstance(x, PiMonomial):
            return PiPolynomial([x])
        if isinstance(x, (int, Fraction)):
            return PiPolynomial({0: x})
        raise TypeError(f"cannot coerce {x!r}")

    def __add__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        d = dict(self._terms)
        for k, v in o._terms:
            d[k] = d.get(k, Fraction(0)) + v
        return PiPolynomial(d)

    __radd__ = __add__

    def __neg__(self):
        return PiPolynomial({k: -v for k, v in self._terms})

    def __sub__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        d: dict[int, Fraction] = {}
        for k1, v1 in self._terms:
            for k2, v2 in o._terms:
                d[k1 + k2] = d.get(k1 + k2, Fraction(0)) + v1 * v2
        return PiPolynomial(d)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self._terms == o._terms

    def __hash__(self) -> int:
        return hash(self._terms)

    def __repr__(self) -> str:
        return f"PiPolynomial({self.render()!r})"

    def render(self) -> str:
        if not self._terms:
            return PiMonomial.zero().render()
        return " + ".join(m.render() for m in self.terms)

    __str__ = render

    @classmethod
    def parse(cls, text: str) -> "PiPolynomial":
        parts = [p for p in text.split(" + ")]
        return cls([PiMonomial.parse(p) for p in parts])

    def to_float(self, precision_bits: int = 53):
        return pi_to_float(self, precision_bits)


def pi_add(a, b) -> PiPolynomial:
    return PiPolynomial._coerce(a) + PiPolynomial._coerce(b)


def pi_mul(a, b):
    """Product; monomial times monomial stays a monomial."""
    if isinstance(a, PiMonomial) and isinstance(b, PiMonomial):
        return a * b
    return PiPolynomial._coerce(a) * PiPolynomial._coerce(b)


def pi_to_float(a, precision_bits: int = 53) -> mpmath.mpf:
    """Round ``a`` to an mpf carrying ``precision_bits`` of mantissa.

    Each term is evaluated with guard bits and the sum is rounded once.
    """
    if precision_bits < 2:
        raise ValueError("precision_bits must be at least 2")
    poly = PiPolynomial._coerce(a)
    guard = 32 + 4 * len(poly._terms)
    with mpmath.workprec(precision_bits + guard):
        pi = mpmath.pi
        total = mpmath.mpf(0)
        for k, v in poly._terms:
            total += mpmath.mpf(v.numerator) / v.denominator * pi ** (2 * k)
    with mpmath.workprec(precision_bits):
        return +total
