import itertools
from fractions import Fraction
from math import comb, factorial

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpvl.exactnum import PiMonomial, pi_to_float
from wpvl.psi import psi_intersection
from wpvl.verify import bracket_bound, one_boundary_recursion_grid, tau1_convolution
from wpvl.volumes import (
    check_one_boundary_recursion,
    check_sinh_bound,
    check_volume_comparisons,
    genus0_volume_stream,
    kappa1_reduce,
    sinh_bound_ratio,
    tau_bracket,
    volume_const,
    volume_eval,
    volume_polynomial,
)

PI2 = float(mpmath.pi**2)


def mono(c, k):
    return PiMonomial(Fraction(c), k)


# -- independent genus-zero oracle ------------------------------------------

def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def multinomial_psi0(d):
    n = len(d)
    if n < 3 or sum(d) != n - 3:
        return Fraction(0)
    v = Fraction(factorial(n - 3))
    for di in d:
        v /= factorial(di)
    return v


def oracle_volume0(n):
    """V_{0,n} from the closed genus-zero psi formula summed over set partitions."""
    m = n - 3
    total = Fraction(0)
    for part in set_partitions(list(range(m))):
        sign = (-1) ** (m - len(part))
        total += sign * multinomial_psi0((0,) * n + tuple(len(b) + 1 for b in part))
    return PiMonomial(total * Fraction(2**m, factorial(m)), m)


@pytest.mark.parametrize("n", range(3, 10))
def test_genus0_volumes_match_set_partition_oracle(n):
    assert volume_const(0, n) == oracle_volume0(n)


# -- kappa reduction ----------------------------------------------------------

def test_kappa_examples():
    assert kappa1_reduce(0, 4, (0, 0, 0, 0), 1) == 1
    assert kappa1_reduce(1, 1, (0,), 1) == Fraction(1, 24)
    assert kappa1_reduce(2, 2, (2, 3), 0) == psi_intersection(2, (2, 3))


def test_kappa_rejects_degree_mismatch():
    with pytest.raises(ValueError):
        kappa1_reduce(0, 4, (0, 0, 0, 0), 2)
    with pytest.raises(ValueError):
        kappa1_reduce(0, 4, (0, 0, 0), 1)


# -- brackets and volumes ------------------------------------------------------

def test_bracket_examples():
    assert tau_bracket(0, (0, 0, 0)) == mono(1, 0)
    assert tau_bracket(0, (0, 0, 0, 1)) == mono(12, 0)
    assert tau_bracket(0, (0, 0, 0, 0)) == mono(2, 1)
    assert tau_bracket(0, (5, 0, 0)).is_zero()
    assert tau_bracket(0, (0, 0)).is_zero()


@pytest.mark.parametrize("g,n,text", [
    (0, 3, "1/1*pi^0"), (0, 4, "2/1*pi^2"), (0, 5, "10/1*pi^4"), (0, 6, "244/3*pi^6"),
    (0, 7, "2758/3*pi^8"), (0, 8, "199784/15*pi^10"), (1, 1, "1/12*pi^2"), (1, 2, "1/4*pi^4"),
])
def test_known_volumes(g, n, text):
    assert volume_const(g, n) == PiMonomial.parse(text)


def test_unstable_volume_rejected():
    for g, n in [(0, 2), (1, 0), (0, 0)]:
        with pytest.raises(ValueError):
            volume_const(g, n)
        with pytest.raises(ValueError):
            volume_polynomial(g, n)


def test_polynomial_0_4():
    p = volume_polynomial(0, 4)
    assert p.constant_term() == mono(2, 1)
    assert p.coefficient((1, 0, 0, 0)) == mono(Fraction(1, 2), 0)
    assert p.coefficient((0, 0, 1, 0)) == mono(Fraction(1, 2), 0)
    assert len(p.coeffs) == 2


def test_polynomial_1_1():
    p = volume_polynomial(1, 1)
    assert p.constant_term() == mono(Fraction(1, 12), 1)
    assert p.coefficient((1,)) == mono(Fraction(1, 48), 0)


def test_polynomial_0_5_positive_with_expected_constant():
    p = volume_polynomial(0, 5)
    assert p.constant_term() == mono(10, 2)
    assert all(c.coeff > 0 for c in p.coeffs.values())
    assert max(2 * sum(ms) for ms in p.coeffs) <= p.degree


@pytest.mark.parametrize("g,n", [(0, 6), (1, 3), (2, 1), (2, 2)])
def test_polynomial_invariants(g, n):
    p = volume_polynomial(g, n)
    assert p.constant_term() == volume_const(g, n)
    for ms, c in p.coeffs.items():
        assert c.coeff > 0
        assert 2 * sum(ms) <= p.degree
        assert c.pi2_power == 3 * g - 3 + n - sum(ms)


def test_polynomial_evaluate_matches_volume_eval():
    p = volume_polynomial(1, 3)
    ls = [0.7, 1.9, 2.3]
    assert float(p.evaluate(ls)) == pytest.approx(float(volume_eval(1, 3, ls)), rel=1e-14)


def test_volume_eval_examples():
    assert float(volume_eval(0, 4, [0])) == pytest.approx(2 * PI2, rel=1e-15)
    assert float(volume_eval(0, 4, [2])) == pytest.approx(2 * PI2 + 2, rel=1e-15)
    with pytest.raises(ValueError):
        volume_eval(1, 1, [2j * 3.14159])
    with pytest.raises(ValueError):
        volume_eval(0, 4, [-1.0])
    with pytest.raises(ValueError):
        volume_eval(0, 3, [1, 1, 1, 1])


@given(st.lists(st.floats(0, 5), min_size=1, max_size=4), st.randoms())
@settings(max_examples=25, deadline=None)
def test_volume_eval_symmetric(ls, rnd):
    sh = list(ls)
    rnd.shuffle(sh)
    a, b = float(volume_eval(1, 4, ls)), float(volume_eval(1, 4, sh))
    assert a == pytest.approx(b, rel=1e-13)


def test_volume_eval_precision_consistent():
    lo = volume_eval(0, 7, [1.3, 0.4], 64)
    hi = volume_eval(0, 7, [1.3, 0.4], 256)
    assert abs(lo - hi) <= abs(hi) * mpmath.mpf(2) ** -62


# -- validators -----------------------------------------------------------------

def test_one_boundary_recursion_examples():
    assert check_one_boundary_recursion(0, 0, ())
    assert check_one_boundary_recursion(0, 0, (0,))
    assert check_one_boundary_recursion(1, 1, (0, 0))


def test_one_boundary_recursion_grid():
    ok, detail = one_boundary_recursion_grid(2, 3, 2, 3)
    assert ok, detail


def test_one_boundary_recursion_detects_a_wrong_value():
    # perturbing a single bracket breaks the identity
    from wpvl.volumes import BracketTable
    t = BracketTable()
    t.preload(0, (0, 0, 0, 1), mono(13, 0))
    assert not check_one_boundary_recursion(0, 0, (0,), table=t)


def test_tau1_convolution_identity():
    ok, detail = tau1_convolution(14)
    assert ok, detail


def test_sinh_bound_examples():
    ratio, bound = sinh_bound_ratio(0, 10, [1.0])
    assert check_sinh_bound(0, 10, [1.0])
    assert 1 <= ratio <= bound
    assert float(bound) == pytest.approx(1.0421906, abs=1e-7)
    ratio, bound = sinh_bound_ratio(0, 7, [0, 0, 0])
    assert ratio == 1 and bound == 1
    assert check_sinh_bound(1, 5, [2.0, 3.0])
    with pytest.raises(ValueError):
        check_sinh_bound(0, 2, [1.0])


def test_bracket_bound_grid():
    ok, detail = bracket_bound(2, 6)
    assert ok, detail


def test_vanishing_exactly_over_degree():
    for g in range(3):
        for n in range(1, 6):
            if 2 * g + n <= 2:
                continue
            top = 3 * g - 3 + n
            for d in itertools.combinations_with_replacement(range(top + 3), n):
                assert tau_bracket(g, d).is_zero() == (sum(d) > top)


def test_volume_comparisons_report():
    rep = check_volume_comparisons(2, 8)
    assert rep.ratios[(0, 4)] == pytest.approx(2 * 2 * PI2 / (10 * PI2**2), rel=1e-12)
    assert rep.b0 > 0
    assert rep.all_transposed_hold


@pytest.mark.xfail(strict=True, reason="V_{g,n+4} <= V_{g-1,n+2} is false as written; "
                                       "the transposed V_{g-1,n+4} <= V_{g,n+2} holds")
def test_volume_comparison_literal_statement():
    assert check_volume_comparisons(2, 8).all_hold


# -- genus-zero stream -------------------------------------------------------------

def test_stream_small_values():
    s = genus0_volume_stream(6)
    assert s[:3] == [mono(1, 0), mono(2, 1), mono(10, 2)]
    assert s[3] == mono(Fraction(244, 3), 3)


def test_stream_exact_matches_engine():
    assert genus0_volume_stream(16) == [volume_const(0, n) for n in range(3, 17)]


def test_stream_float_matches_exact():
    ex = genus0_volume_stream(60)
    fl = genus0_volume_stream(60, "float")
    for e, f in zip(ex, fl):
        assert abs(f / pi_to_float(e, 80) - 1) < 1e-9


def test_stream_float_to_300_is_finite_and_accurate():
    fl = genus0_volume_stream(300, "float")
    ex = genus0_volume_stream(300)
    assert len(fl) == 298
    for n in (100, 200, 300):
        assert abs(fl[n - 3] / pi_to_float(ex[n - 3], 80) - 1) < 1e-9


def test_stream_rejects_small_n():
    with pytest.raises(ValueError):
        genus0_volume_stream(2)
