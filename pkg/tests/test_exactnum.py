from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpvl.exactnum import PiMonomial, PiPolynomial, pi_add, pi_mul, pi_to_float

fracs = st.fractions(max_denominator=10**6).filter(lambda f: abs(f) < 10**9)
monos = st.builds(PiMonomial, fracs, st.integers(0, 6))
polys = st.lists(monos, max_size=4).map(PiPolynomial)


def mono(c, k):
    return PiMonomial(Fraction(c), k)


def test_add_inverse_cancels():
    assert pi_add(mono(2, 1), mono(-2, 1)).is_zero()


def test_add_distinct_grades_keeps_both():
    p = pi_add(mono(1, 0), mono(1, 1))
    assert p == PiPolynomial({0: 1, 1: 1})
    assert len(p.terms) == 2


def test_add_same_grade():
    assert pi_add(mono(Fraction(1, 3), 2), mono(Fraction(2, 3), 2)).as_monomial() == mono(1, 2)


def test_mul_grades_add():
    assert pi_mul(mono(2, 1), mono(5, 3)) == mono(10, 4)


def test_mul_by_zero():
    assert pi_mul(mono(7, 3), PiMonomial.zero()).is_zero()
    assert (PiPolynomial({1: 3, 2: 1}) * 0).is_zero()


def test_mul_rationals():
    assert pi_mul(mono(Fraction(3, 2), 0), mono(Fraction(4, 9), 2)) == mono(Fraction(2, 3), 2)


def test_zero_is_canonical():
    z = PiMonomial(Fraction(0), 5)
    assert z.pi2_power == 0 and z == PiMonomial.zero()


def test_to_float_values():
    assert float(pi_to_float(mono(2, 1), 64)) == pytest.approx(19.7392088021787, rel=1e-14)
    assert pi_to_float(mono(1, 0), 53) == 1
    assert float(pi_to_float(mono(10, 2), 64)) == pytest.approx(974.0909103400244, rel=1e-14)


def test_to_float_against_mpmath_high_precision():
    with mpmath.workprec(400):
        ref = mpmath.mpf(244) / 3 * mpmath.pi**6
        got = pi_to_float(mono(Fraction(244, 3), 3), 200)
        assert abs(got - ref) <= 2 * abs(ref) * mpmath.mpf(2) ** -200


def test_render_and_parse():
    m = mono(Fraction(-29, 5760), 3)
    assert m.render() == "-29/5760*pi^6"
    assert PiMonomial.parse("2/1*pi^2") == mono(2, 1)
    with pytest.raises(ValueError):
        PiMonomial.parse("1/2*pi^3")
    with pytest.raises(ValueError):
        PiMonomial.parse("garbage")


@given(monos)
def test_monomial_round_trip(m):
    assert PiMonomial.parse(m.render()) == m


@given(polys)
def test_polynomial_round_trip(p):
    assert PiPolynomial.parse(p.render()) == p


@given(polys, polys, polys)
@settings(max_examples=60)
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a
    assert (a - a).is_zero()


@given(polys)
def test_no_zero_coefficients_stored(p):
    assert all(t.coeff != 0 for t in p.terms)


@given(monos, st.integers(60, 200))
@settings(max_examples=40)
def test_precision_refinement(m, p):
    lo = pi_to_float(m, p)
    hi = pi_to_float(m, p + 1)
    with mpmath.workprec(p + 40):
        assert abs(hi - lo) <= mpmath.mpf(2) ** (-p + 2) * abs(hi)
