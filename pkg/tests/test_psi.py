import threading
from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpvl.psi import PsiEngine, TauKey, check_dilaton, check_string, psi_intersection
from wpvl.verify import string_dilaton_grid, top_degree_keys


def genus0_closed_form(d):
    v = Fraction(factorial(len(d) - 3))
    for di in d:
        v /= factorial(di)
    return v


@pytest.mark.parametrize("g,d,expected", [
    (0, (0, 0, 0), 1),
    (0, (0, 0, 0, 2), 0),  # off-degree
    (0, (0, 0, 0, 1), 1),
    (0, (0, 0, 0, 1, 1), 2),
    (1, (1,), Fraction(1, 24)),
    (1, (0, 2), Fraction(1, 24)),
    (2, (4,), Fraction(1, 1152)),
    (2, (3, 2), Fraction(29, 5760)),
    (3, (7,), Fraction(1, 82944)),
])
def test_known_values(g, d, expected):
    assert psi_intersection(g, d) == expected


def test_tau0_cubed_tau2_in_genus_zero_is_off_degree():
    # <tau_0^3 tau_2>_0 has |d| = 2 > 1, so it vanishes; the degree-1 value is <tau_0^3 tau_1>
    assert psi_intersection(0, (0, 0, 0, 2)) == 0
    assert psi_intersection(0, (0, 0, 0, 0, 2)) == 1


@pytest.mark.parametrize("g,d", [(0, ()), (0, (0,)), (0, (0, 0)), (1, ()), (0, (1, 1))])
def test_unstable_or_mismatched_is_zero(g, d):
    assert psi_intersection(g, d) == 0


def test_accepts_taukey():
    assert psi_intersection(TauKey(1, (1,))) == Fraction(1, 24)


def test_taukey_canonical():
    assert TauKey(2, (4, 0, 1)).indices == (0, 1, 4)
    assert TauKey.parse(TauKey(2, (4, 0, 1)).render()) == TauKey(2, (0, 1, 4))
    with pytest.raises(ValueError):
        TauKey(-1, ())


@given(st.integers(0, 3), st.lists(st.integers(0, 6), min_size=1, max_size=6), st.randoms())
@settings(max_examples=80, deadline=None)
def test_symmetric_and_nonnegative(g, d, rnd):
    v = psi_intersection(g, d)
    shuffled = list(d)
    rnd.shuffle(shuffled)
    assert psi_intersection(g, shuffled) == v
    assert v >= 0


def test_genus0_closed_form_up_to_12_points():
    for key in top_degree_keys(0, 12):
        assert psi_intersection(key) == genus0_closed_form(key.indices), key


def test_string_examples():
    assert check_string(0, (0, 0, 0, 0, 1))
    assert check_string(1, (0, 2))
    assert check_string(0, (0, 0, 0))


def test_dilaton_examples():
    assert check_dilaton(0, (1, 0, 0, 0))
    assert check_dilaton(0, (1, 0, 0, 0, 1))
    assert check_dilaton(2, (1, 4))


def test_string_rejects_bad_key():
    with pytest.raises(ValueError):
        check_string(1, (1,))  # no tau_0
    with pytest.raises(ValueError):
        check_string(0, (0, 0))  # unstable


def test_string_dilaton_full_grid():
    ok, detail = string_dilaton_grid(3, 8)
    assert ok, detail


def test_concurrent_readers_agree():
    eng = PsiEngine()
    keys = list(top_degree_keys(2, 6))
    ref = {k: PsiEngine().intersection(k) for k in keys}
    errors = []

    def work():
        for k in keys:
            if eng.intersection(k) != ref[k]:
                errors.append(k)

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
