"""Expected geodesic counts and related constants for random surfaces.

Counts come from Mirzakhani's integration formula.  Cutting along a simple
closed curve of length x leaves surfaces whose volume polynomials are
evaluated with one (or two) boundary lengths equal to x, so every count is an
integral of ``x * (polynomial in x^2)`` with exact pi-graded coefficients.
Only the final evaluation at the length cap is floating point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import mpmath
import numpy as np
from scipy import integrate

from .bessel import BesselContext, bessel_I0, make_context
from .exactnum import PiMonomial, PiPolynomial, pi_to_float
from .volumes import (
    BracketTable,
    boundary_profile,
    genus0_scaled,
    two_boundary_profile,
    volume_const,
)

SYSTOLE_NOTE = (
    "systole constant uses the Poisson mean ((b^2-a^2)/2)(j0 pi)^2/4 (1 - J3/J1); "
    "the alternative exponent x^2 j0^2/16 does not reproduce 0.4225 and is not used"
)


class BudgetExceeded(RuntimeError):
    pass


class CurveClass(enum.Enum):
    TWO_CUSP_SEPARATING = "two_cusp_separating"
    ALL_SEPARATING_SIMPLE = "all_separating_simple"
    NONSEPARATING = "nonseparating"
    ALL_SIMPLE = "all_simple"


@dataclass(frozen=True)
class CountQuery:
    genus: int
    n_cusps: int
    length_cap: float
    curve_class: CurveClass = CurveClass.ALL_SIMPLE

    def exact_regime(self) -> bool:
        """Short enough that every counted geodesic is simple."""
        return self.length_cap < 2 * math.asinh(1)


@dataclass
class StatsContext:
    bessel: BesselContext = field(default_factory=make_context)
    series_terms: int = 20
    tail_terms: int = 4000
    quad_nodes: int = 32
    quad_rtol: float = 1e-12
    max_dim: int = 40

    def __post_init__(self) -> None:
        if self.quad_nodes < 32:
            raise ValueError("quad_nodes must be at least 32")


# -- exact integrals ----------------------------------------------------------

def _integral_x_poly(coeffs: dict[int, PiPolynomial], L, precision_bits: int):
    """int_0^L x * sum_d c_d x^{2d} dx = sum_d c_d L^{2d+2} / (2d+2)."""
    with mpmath.workprec(precision_bits + 24):
        Lm = mpmath.mpf(L)
        total = mpmath.mpf(0)
        for d in sorted(coeffs):
            total += pi_to_float(coeffs[d] * Fraction(1, 2 * d + 2), precision_bits + 24) * Lm ** (2 * d + 2)
        return total


def _poly_product(p: list[PiMonomial], q: list[PiMonomial]) -> dict[int, PiPolynomial]:
    out: dict[int, PiPolynomial] = {}
    for a, ca in enumerate(p):
        for b, cb in enumerate(q):
            if ca.is_zero() or cb.is_zero():
                continue
            out[a + b] = out.get(a + b, PiPolynomial()) + ca * cb
    return out


def _check_L(L) -> None:
    if not (L >= 0) or not math.isfinite(float(L)):
        raise ValueError("length cap must be finite and non-negative")


def _check_budget(g: int, n: int, max_dim: int) -> None:
    if 3 * g - 3 + n > max_dim:
        raise BudgetExceeded(f"dimension 3g-3+n = {3 * g - 3 + n} exceeds budget {max_dim}")


def expected_two_cusp_count(g: int, n: int, L: float, precision_bits: int = 53,
                            table: BracketTable | None = None) -> float:
    """Expected number of geodesics of length <= L cutting off exactly two cusps.

    E = w C(n,2) / V_{g,n} * int_0^L x V_{g,n-1}(0_{n-2}, x) dx, with w = 1/2
    when both sides are pairs of pants with two cusps (g = 0, n = 4).
    """
    _check_L(L)
    if n < 2 or 2 * g - 2 + (n - 1) <= 0:
        raise ValueError(f"complement of a two-cusp curve is unstable for (g, n) = ({g}, {n})")
    prof = boundary_profile(g, n - 2, table)
    w = Fraction(comb(n, 2), 2 if (g == 0 and n == 4) else 1)
    integral = _integral_x_poly({d: PiPolynomial([c]) for d, c in enumerate(prof)}, L, precision_bits)
    with mpmath.workprec(precision_bits + 24):
        val = integral * w.numerator / w.denominator / pi_to_float(volume_const(g, n, table), precision_bits + 24)
    return float(val)


def two_cusp_limit_density(L: float, ctx: BesselContext | None = None) -> float:
    """(x0 / 4 pi^2) int_0^L x I_0(j0 x / 2 pi) dx, the large-n value of E/n."""
    c = ctx or make_context()
    x0, k = float(c.x0), float(c.j0) / (2 * math.pi)
    val, _ = integrate.quad(lambda x: x * float(bessel_I0(k * x)), 0, L, epsabs=0, epsrel=1e-13)
    return x0 / (4 * math.pi**2) * val


def second_factorial_moment_two_cusp(n: int, c: float, g: int = 0, precision_bits: int = 53,
                                     table: BracketTable | None = None) -> float:
    """E[(N)_2] for two-cusp curves of length <= c.

    Ordered pairs of disjoint cusp pairs number n!/(2! 2! (n-4)!); cutting
    both curves leaves two pants and a (g, n-4 cusps + 2 boundaries) piece.
    Zero when that piece is unstable.
    """
    _check_L(c)
    if n < 4 or 2 * g - 2 + (n - 2) <= 0:
        return 0.0
    prof = two_boundary_profile(g, n - 4, table)
    mult = factorial(n) // (4 * factorial(n - 4))
    with mpmath.workprec(precision_bits + 24):
        cm = mpmath.mpf(c)
        total = mpmath.mpf(0)
        for (a, b), coef in sorted(prof.items()):
            w = coef * Fraction(1, (2 * a + 2) * (2 * b + 2))
            total += pi_to_float(w, precision_bits + 24) * cm ** (2 * a + 2 * b + 4)
        val = mult * total / pi_to_float(volume_const(g, n, table), precision_bits + 24)
    return float(val)


def _separating_types(g: int, n: int):
    """Unordered splittings (g1, n1 | g2, n2) with stable one-boundary sides."""
    for g1 in range(g + 1):
        for n1 in range(n + 1):
            g2, n2 = g - g1, n - n1
            if (g1, n1) > (g2, n2):
                continue
            if 2 * g1 - 1 + n1 <= 0 or 2 * g2 - 1 + n2 <= 0:
                continue
            w = Fraction(comb(n, n1), 2 if (g1, n1) == (g2, n2) else 1)
            yield (g1, n1, g2, n2, w)


def expected_simple_count(g: int, n: int, L: float, c_nonsep: Fraction = Fraction(1, 2),
                          precision_bits: int = 53, max_dim: int = 40,
                          table: BracketTable | None = None) -> float:
    """E[number of simple closed geodesics of length <= L]."""
    _check_L(L)
    if 2 * g - 2 + n <= 0:
        raise ValueError(f"unstable (g, n) = ({g}, {n})")
    _check_budget(g, n, max_dim)
    poly: dict[int, PiPolynomial] = {}

    def add(terms: dict[int, PiPolynomial], w: Fraction) -> None:
        for d, v in terms.items():
            poly[d] = poly.get(d, PiPolynomial()) + v * w

    if g >= 1 and c_nonsep:
        prof2 = two_boundary_profile(g - 1, n, table)
        diag: dict[int, PiPolynomial] = {}
        for (a, b), coef in prof2.items():
            diag[a + b] = diag.get(a + b, PiPolynomial()) + coef
        add(diag, Fraction(c_nonsep))
    for g1, n1, g2, n2, w in _separating_types(g, n):
        add(_poly_product(boundary_profile(g1, n1, table), boundary_profile(g2, n2, table)), w)
    integral = _integral_x_poly(poly, L, precision_bits)
    with mpmath.workprec(precision_bits + 24):
        val = integral / pi_to_float(volume_const(g, n, table), precision_bits + 24)
    return float(val)


# -- limit density f(L) ---------------------------------------------------------

def _gauss_legendre(L: float, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * L * (x + 1), 0.5 * L * w


def _quad_to_tolerance(fn_values, L: float, start: int, rtol: float, cap: int = 4096):
    """Gauss-Legendre with node doubling until two rules agree to rtol."""
    nodes = start
    x, w = _gauss_legendre(L, nodes)
    prev = float(np.dot(w, fn_values(x)))
    while nodes < cap:
        nodes *= 2
        x, w = _gauss_legendre(L, nodes)
        cur = float(np.dot(w, fn_values(x)))
        if abs(cur - prev) <= rtol * abs(cur):
            return cur, nodes
        prev = cur
    return prev, nodes


@dataclass
class FLimitResult:
    value: float
    head_terms: int
    tail_terms: int
    tail_value: float
    remainder_value: float
    quad_nodes: int
    meta: dict = field(default_factory=dict)


def f_limit_detail(L: float, ctx: StatsContext | None = None,
                   table: BracketTable | None = None) -> FLimitResult:
    """f(L) = sum_{i>=2} (1/i!)(x0/2pi^2)^{i-1} int_0^L l V_{0,i+1}(0_i, l) I_0(j0 l/2pi) dl.

    Terms i <= series_terms use exact one-boundary profiles.  Later terms use
    V_{0,i+1}(0_i, l) ~ V_{0,i+1} I_0(j0 l / 2 pi), whose weights come from the
    float genus-zero stream up to tail_terms; beyond that the terms decay like
    i^{-5/2} and the remainder is summed in closed form from the last term.
    """
    sc = ctx or StatsContext()
    _check_L(L)
    if L == 0:
        return FLimitResult(0.0, 0, 0, 0.0, 0.0, 0)
    bc = sc.bessel
    x0, k = float(bc.x0), float(bc.j0) / (2 * math.pi)
    tp2 = 2 * math.pi**2
    i0_cache: dict[int, np.ndarray] = {}

    def i0_at(x: np.ndarray) -> np.ndarray:
        key = len(x)
        if key not in i0_cache:
            i0_cache[key] = np.array([float(bessel_I0(k * t)) for t in x])
        return i0_cache[key]

    head = 0.0
    used_nodes = sc.quad_nodes
    N = max(2, sc.series_terms)
    for i in range(2, N + 1):
        prof = boundary_profile(0, i, table)
        cf = np.array([float(pi_to_float(c, 64)) for c in prof])
        pref = x0 ** (i - 1) / (math.factorial(i) * tp2 ** (i - 1))

        def integrand(x, cf=cf):
            poly = np.polynomial.polynomial.polyval(x * x, cf)
            return x * poly * i0_at(x)

        val, nodes = _quad_to_tolerance(integrand, L, sc.quad_nodes, sc.quad_rtol)
        used_nodes = max(used_nodes, nodes)
        head += pref * val

    K, _ = _quad_to_tolerance(lambda x: x * i0_at(x) ** 2, L, sc.quad_nodes, sc.quad_rtol)
    M = max(sc.tail_terms, N + 1)
    alpha = genus0_scaled(M + 1, x0)  # alpha[n-3] = V_{0,n} x0^{n-2} / ((2pi^2)^{n-3} (n-2)!)
    i = np.arange(N + 1, M + 1)
    weights = alpha[i + 1 - 3] / (tp2 * i)
    tail = K * math.fsum(weights)
    last = K * float(weights[-1]) if len(weights) else 0.0
    # sum_{j>M} t_j with t_j ~ t_M (M/j)^{5/2}
    remainder = last * M / 1.5
    value = head + tail + remainder
    return FLimitResult(value, N - 1, int(len(weights)), tail, remainder, used_nodes,
                        meta={"head_i_max": N, "tail_i_max": M})


def f_limit(L: float, ctx: StatsContext | None = None, table: BracketTable | None = None) -> float:
    return f_limit_detail(L, ctx, table).value


# -- closed-form constants -------------------------------------------------------

def _bctx(ctx) -> BesselContext:
    if ctx is None:
        return make_context()
    if isinstance(ctx, StatsContext):
        return ctx.bessel
    return ctx


def poisson_mean(a: float, b: float, ctx=None) -> float:
    """lambda_[a,b] = ((b^2 - a^2)/2) ((j0 pi)^2 / 4) (1 - J3(j0)/J1(j0))."""
    if a < 0 or b < a:
        raise ValueError("need 0 <= a <= b")
    c = _bctx(ctx)
    with mpmath.workprec(c.precision_bits):
        v = (mpmath.mpf(b) ** 2 - mpmath.mpf(a) ** 2) / 2 * (c.j0 * mpmath.pi) ** 2 / 4 * c.kappa
    return float(v)


def expected_systole_constant(ctx=None) -> float:
    """sqrt(2) / (j0 sqrt(pi) sqrt(1 - J3/J1))"""
    c = _bctx(ctx)
    with mpmath.workprec(c.precision_bits):
        v = mpmath.sqrt(2) / (c.j0 * mpmath.sqrt(mpmath.pi) * mpmath.sqrt(c.kappa))
    return float(v)


def systole_quadrature(ctx=None) -> float:
    """int_0^inf exp(-lambda_[0,x]) dx by adaptive quadrature."""
    c = _bctx(ctx)
    rate = poisson_mean(0.0, 1.0, c)
    val, _ = integrate.quad(lambda x: math.exp(-rate * x * x), 0, math.inf, epsabs=1e-13, epsrel=1e-12)
    return val


def systole_tail_terms(c: float, n: int) -> tuple[float, float]:
    """(c^2 / n^{5/4}, c^{-2})"""
    if c <= 0 or n < 3:
        raise ValueError("need c > 0 and n >= 3")
    return c * c / n**1.25, 1.0 / (c * c)


def small_eigenvalue_constants(eps: float, ctx=None) -> tuple[float, float]:
    """(c_eps, fraction) = ((1/8)(x0 eps / 6 pi)^2, (1/8)(x0 / 24 pi)^2)."""
    if not (0 < eps <= 0.25):
        raise ValueError("eps must lie in (0, 1/4]; the eigenvalue bound is stated below 1/4")
    x0 = float(_bctx(ctx).x0)
    c_eps = (x0 * eps / (6 * math.pi)) ** 2 / 8
    fraction = (x0 / (24 * math.pi)) ** 2 / 8
    return c_eps, fraction


def simple_growth_exponent(ctx=None) -> float:
    """c0 = j0 / 2 pi + 1/2, growth rate of I_0(j0 x / 2 pi) sinh(x / 2)."""
    c = _bctx(ctx)
    return float(c.j0) / (2 * math.pi) + 0.5


def simple_growth_fit(ctx=None, L_lo: float = 10.0, L_hi: float = 30.0, steps: int = 21) -> float:
    """Slope of log F(L) + log(L)/2 over [L_lo, L_hi], F(L) = int_0^L I_0(j0 x/2pi) sinh(x/2) dx.

    The sqrt(L) correction removes the algebraic prefactor of I_0 so the
    fitted slope converges to the exponential rate.
    """
    c = _bctx(ctx)
    k = float(c.j0) / (2 * math.pi)
    f = lambda x: float(bessel_I0(k * x)) * math.sinh(x / 2)
    Ls = np.linspace(L_lo, L_hi, steps)
    F = []
    acc, prev = 0.0, 0.0
    for Lv in Ls:
        piece, _ = integrate.quad(f, prev, Lv, epsabs=0, epsrel=1e-12)
        acc += piece
        prev = Lv
        F.append(acc)
    y = np.log(np.array(F)) + 0.5 * np.log(Ls)
    slope, _ = np.polyfit(Ls, y, 1)
    return float(slope)
