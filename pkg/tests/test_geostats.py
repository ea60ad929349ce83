import math
from dataclasses import replace

import pytest
from scipy import integrate

from wpvl.bessel import make_context
from wpvl.geostats import (
    BudgetExceeded,
    CountQuery,
    StatsContext,
    expected_simple_count,
    expected_systole_constant,
    expected_two_cusp_count,
    f_limit,
    f_limit_detail,
    poisson_mean,
    second_factorial_moment_two_cusp,
    simple_growth_exponent,
    simple_growth_fit,
    small_eigenvalue_constants,
    systole_quadrature,
    systole_tail_terms,
    two_cusp_limit_density,
)

CTX = make_context()
X0 = float(CTX.x0)
PI2 = math.pi**2


def test_two_cusp_small_case():
    assert expected_two_cusp_count(0, 4, 1.0) == pytest.approx(3 / (4 * PI2), rel=1e-14)
    assert expected_two_cusp_count(0, 4, 0.0) == 0
    with pytest.raises(ValueError):
        expected_two_cusp_count(0, 3, 1.0)
    with pytest.raises(ValueError):
        expected_two_cusp_count(0, 5, -1.0)


def test_two_cusp_against_quadrature():
    # cutting off two cusps of (0, 5) leaves V_{0,4}(x, 0, 0, 0) = 2 pi^2 + x^2 / 2
    val, _ = integrate.quad(lambda x: x * (2 * PI2 + x * x / 2), 0, 0.7)
    assert expected_two_cusp_count(0, 5, 0.7) == pytest.approx(10 * val / (10 * PI2**2), rel=1e-12)


def test_two_cusp_per_cusp_approaches_limit():
    lim = two_cusp_limit_density(0.5)
    res = [abs(expected_two_cusp_count(0, n, 0.5) / n - lim) for n in range(8, 21)]
    assert all(a > b for a, b in zip(res, res[1:]))


def test_second_factorial_moment_oracle():
    # ordered pairs of disjoint cusp pairs: 6!/(2! 2! 2!) = 90; middle piece V_{0,4}(x, y, 0, 0)
    val, _ = integrate.dblquad(lambda y, x: x * y * (2 * PI2 + (x * x + y * y) / 2), 0, 0.5, 0, 0.5,
                               epsabs=0, epsrel=1e-13)
    assert second_factorial_moment_two_cusp(6, 0.5) == pytest.approx(90 * val / (244 / 3 * PI2**3), rel=1e-11)
    assert second_factorial_moment_two_cusp(4, 0.5) == 0.0
    assert second_factorial_moment_two_cusp(5, 0.5) > 0


def test_simple_count_small_cases():
    assert expected_simple_count(0, 4, 1.0) == pytest.approx(expected_two_cusp_count(0, 4, 1.0), rel=1e-14)
    assert expected_simple_count(1, 2, 0.5) > 0
    a = expected_simple_count(1, 2, 0.5, c_nonsep=0)
    b = expected_simple_count(1, 2, 0.5, c_nonsep=1)
    assert a < expected_simple_count(1, 2, 0.5) < b
    with pytest.raises(BudgetExceeded):
        expected_simple_count(0, 50, 0.5, max_dim=40)
    with pytest.raises(ValueError):
        expected_simple_count(0, 2, 0.5)


def test_simple_count_per_cusp_decreases_toward_f():
    f = f_limit(0.5)
    vals = [expected_simple_count(0, n, 0.5) / n for n in range(8, 21, 4)]
    assert all(a > b > f for a, b in zip(vals, vals[1:]))


def test_f_limit_values():
    assert f_limit(0) == 0
    assert f_limit(1.0) == pytest.approx(0.0115508, abs=1e-7)
    assert X0 / (8 * PI2) < f_limit(1.0) < 0.05
    assert f_limit(0.1) / 0.01 == pytest.approx(0.011295, abs=1e-6)
    d = f_limit_detail(0.5)
    assert d.head_terms == 19 and d.tail_terms > 0
    assert d.remainder_value < d.tail_value < d.value


def test_f_limit_monotone_and_stable_under_refinement():
    vals = [f_limit(L) for L in (0.1, 0.3, 0.6, 1.0)]
    assert vals == sorted(vals)
    longer_tail = StatsContext(tail_terms=8000, quad_nodes=64)
    longer_head = StatsContext(series_terms=24)
    assert f_limit(0.6, longer_tail) == pytest.approx(vals[2], rel=1e-6)
    assert f_limit(0.6, longer_head) == pytest.approx(vals[2], rel=1e-6)
    with pytest.raises(ValueError):
        StatsContext(quad_nodes=16)


def test_poisson_mean():
    assert poisson_mean(0, 1) == pytest.approx(4.399835, abs=1e-6)
    assert poisson_mean(1, 1) == 0
    assert poisson_mean(1, 2) == pytest.approx(3 * poisson_mean(0, 1), rel=1e-14)
    with pytest.raises(ValueError):
        poisson_mean(2, 1)


def test_systole_constant_and_quadrature():
    assert expected_systole_constant() == pytest.approx(0.4225000, abs=1e-7)
    assert systole_quadrature() == pytest.approx(expected_systole_constant(), abs=1e-10)


def test_systole_scales_with_j0():
    ctx = make_context()
    doubled = replace(ctx, j0=2 * ctx.j0)
    assert expected_systole_constant(doubled) == pytest.approx(expected_systole_constant(ctx) / 2, rel=1e-14)


def test_systole_tail_terms():
    a, b = systole_tail_terms(2.0, 16)
    assert a == pytest.approx(4 / 32) and b == 0.25
    with pytest.raises(ValueError):
        systole_tail_terms(0, 10)


def test_small_eigenvalue_constants():
    c, frac = small_eigenvalue_constants(0.25)
    assert c == pytest.approx(8.5679e-6, rel=1e-4)
    assert c == pytest.approx(frac, rel=1e-14)
    assert small_eigenvalue_constants(0.1)[0] < c
    for bad in (0, 0.3):
        with pytest.raises(ValueError):
            small_eigenvalue_constants(bad)


def test_growth_rate():
    c0 = simple_growth_exponent()
    assert c0 == pytest.approx(0.882740, abs=1e-6) and c0 < 1
    assert simple_growth_fit() == pytest.approx(c0, abs=5e-3)


def test_count_query_regime():
    assert CountQuery(0, 10, 1.0).exact_regime()
    assert not CountQuery(0, 10, 2.0).exact_regime()
