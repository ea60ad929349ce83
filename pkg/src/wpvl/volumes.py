"""Normalized brackets and Weil-Petersson volume polynomials.

A mixed psi/kappa_1 integral is reduced to pure psi numbers by pushing the
kappa_1 factors forward from extra marked points:

    <tau_d kappa_1^m> = sum over set partitions P of {1..m}
                        (-1)^(m - |P|) <tau_d prod_{B in P} tau_{|B|+1}>

Grouping set partitions by their block-size shape gives the integer
coefficient ``m! / (prod b_i! * prod mult_j!)`` used below.

The normalized bracket multiplies by the Weil-Petersson grading
``omega = 2 pi^2 kappa_1``:

    [tau_d]_{g,n} = 2^{2|d|} prod (2d_i+1)!! / m! * (2 pi^2)^m * <tau_d kappa_1^m>

with ``m = 3g - 3 + n - |d|``.  Volume polynomials use unscaled boundary
lengths L; the coefficient of ``prod L_i^{2 d_i}`` is
``[tau_d] / prod(2^{2d_i} (2d_i+1)!)``.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Sequence

import mpmath
import numpy as np
from gmpy2 import mpq

from .exactnum import PiMonomial, PiPolynomial, pi_to_float
from .psi import DEFAULT_ENGINE, PsiEngine, TauKey, dfact

# Identifies the conventions baked into cached values.
CONVENTION = {"orbifold": True, "kappa_reduction": "setpartition-v1", "grading": "2pi2"}


def convention_fingerprint() -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(CONVENTION.items()))


@lru_cache(maxsize=None)
def _shape_terms(m: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
    """Signed coefficient and kappa insertion exponents for each shape of m."""
    out = []
    for lam in _partitions(m, m):
        c = factorial(m)
        mult: dict[int, int] = {}
        for b in lam:
            c //= factorial(b)
            mult[b] = mult.get(b, 0) + 1
        for x in mult.values():
            c //= factorial(x)
        sign = -1 if (m - len(lam)) % 2 else 1
        out.append((sign * c, tuple(b + 1 for b in lam)))
    return tuple(out)


def _partitions(m: int, cap: int):
    if m == 0:
        yield ()
        return
    for p in range(min(m, cap), 0, -1):
        for rest in _partitions(m - p, p):
            yield (p,) + rest


class BracketTable:
    """Memo layer for kappa reductions and normalized brackets."""

    def __init__(self, engine: PsiEngine | None = None) -> None:
        self.engine = engine or DEFAULT_ENGINE
        self._kappa: dict[tuple[int, tuple[int, ...], int], mpq] = {}
        self._bracket: dict[tuple[int, tuple[int, ...]], PiMonomial] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def clear(self) -> None:
        with self._lock:
            self._kappa.clear()
            self._bracket.clear()
            self.hits = self.misses = 0

    def __len__(self) -> int:
        return len(self._bracket)

    def brackets(self):
        return list(self._bracket.items())

    def preload(self, g: int, d: tuple[int, ...], value: PiMonomial) -> None:
        with self._lock:
            self._bracket[(g, tuple(sorted(d)))] = value

    def kappa_raw(self, g: int, d: tuple[int, ...], m: int) -> mpq:
        key = (g, d, m)
        v = self._kappa.get(key)
        if v is not None:
            return v
        val = self.engine.value
        total = mpq(0)
        for coeff, extra in _shape_terms(m):
            total += coeff * val(g, tuple(sorted(d + extra)))
        with self._lock:
            self._kappa[key] = total
        return total

    def bracket(self, g: int, d: tuple[int, ...]) -> PiMonomial:
        d = tuple(sorted(d))
        key = (g, d)
        v = self._bracket.get(key)
        if v is not None:
            self.hits += 1
            return v
        self.misses += 1
        n = len(d)
        m = 3 * g - 3 + n - sum(d)
        if 2 * g - 2 + n <= 0 or m < 0:
            v = PiMonomial.zero()
        else:
            k = self.kappa_raw(g, d, m)
            scale = 4 ** sum(d) * 2**m
            for di in d:
                scale *= dfact(di + 1)
            q = k * scale / factorial(m)
            v = PiMonomial(Fraction(int(q.numerator), int(q.denominator)), m)
        with self._lock:
            self._bracket[key] = v
        return v


DEFAULT_TABLE = BracketTable()


def _multiset(d: Iterable[int]) -> tuple[int, ...]:
    t = tuple(sorted(int(x) for x in d))
    if t and t[0] < 0:
        raise ValueError("indices must be non-negative")
    return t


def _require_stable(g: int, n: int) -> None:
    if g < 0 or n < 0 or 2 * g + n <= 2:
        raise ValueError(f"unstable (g, n) = ({g}, {n})")


def kappa1_reduce(g: int, n: int, d: Sequence[int], m: int,
                  table: BracketTable | None = None) -> Fraction:
    """Exact ``int psi^d kappa_1^m`` over the compactified moduli space."""
    d = _multiset(d)
    if len(d) != n:
        raise ValueError("len(d) must equal n")
    if m < 0 or sum(d) + m != 3 * g - 3 + n:
        raise ValueError("|d| + m must equal 3g - 3 + n")
    q = (table or DEFAULT_TABLE).kappa_raw(g, d, m)
    return Fraction(int(q.numerator), int(q.denominator))


def tau_bracket(g: int, d: Sequence[int], table: BracketTable | None = None) -> PiMonomial:
    """Normalized bracket [tau_d]_{g,n}; zero when unstable or over degree."""
    return (table or DEFAULT_TABLE).bracket(g, _multiset(d))


def volume_const(g: int, n: int, table: BracketTable | None = None) -> PiMonomial:
    _require_stable(g, n)
    return tau_bracket(g, (0,) * n, table)


def length_weight(d: int) -> Fraction:
    """1 / (2^{2d} (2d+1)!)"""
    return Fraction(1, 4**d * factorial(2 * d + 1))


def _sorted_multisets(k: int, total: int) -> list[tuple[int, ...]]:
    out = []

    def rec(prefix: list[int], lo: int, remaining: int) -> None:
        if len(prefix) == k:
            out.append(tuple(prefix))
            return
        slots = k - len(prefix)
        for v in range(lo, remaining // slots + 1):
            prefix.append(v)
            rec(prefix, v, remaining - v)
            prefix.pop()

    rec([], 0, total)
    out.sort(key=lambda t: (sum(t), t))
    return out


def _distinct_perms(ms: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Distinct orderings of a multiset, lexicographic."""
    counts: dict[int, int] = {}
    for v in ms:
        counts[v] = counts.get(v, 0) + 1
    keys = sorted(counts)
    out: list[tuple[int, ...]] = []
    cur: list[int] = []

    def rec() -> None:
        if len(cur) == len(ms):
            out.append(tuple(cur))
            return
        for v in keys:
            if counts[v]:
                counts[v] -= 1
                cur.append(v)
                rec()
                cur.pop()
                counts[v] += 1

    rec()
    return out


@dataclass(frozen=True)
class VolumePolynomial:
    """Symmetric polynomial V_{g,n}(L_1, ..., L_n) in unscaled lengths.

    ``coeffs`` maps a sorted exponent multiset ``(d_1, ..., d_n)`` to the
    coefficient of ``prod L_i^{2 d_i}`` for any ordering of the d_i.
    """

    genus: int
    n_points: int
    coeffs: dict = field(repr=False)

    @property
    def degree(self) -> int:
        return 2 * (3 * self.genus - 3 + self.n_points)

    def constant_term(self) -> PiMonomial:
        return self.coeffs.get((0,) * self.n_points, PiMonomial.zero())

    def coefficient(self, exponents: Sequence[int]) -> PiMonomial:
        """Coefficient of prod L_i^{2 e_i}."""
        if len(exponents) != self.n_points:
            raise ValueError("need one exponent per boundary")
        return self.coeffs.get(_multiset(exponents), PiMonomial.zero())

    def monomials(self):
        """Yield (ordered exponent tuple, coefficient) for every term."""
        for ms, c in sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0])):
            for p in _distinct_perms(ms):
                yield p, c

    def evaluate(self, lengths: Sequence[float], precision_bits: int = 53):
        lengths = _check_lengths(lengths, self.n_points)
        k = len(lengths)
        top = self.degree // 2
        terms = []
        for ms in _sorted_multisets(k, top):
            c = self.coeffs.get(tuple(sorted(ms + (0,) * (self.n_points - k))))
            if c is None or c.is_zero():
                continue
            terms.append((c, _distinct_perms(ms)))
        return _sum_terms(terms, lengths, precision_bits)

    def render(self) -> str:
        parts = []
        for ms, c in sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0])):
            parts.append(f"[{','.join(map(str, ms))}] {c.render()}")
        return "\n".join(parts)


def _check_lengths(lengths: Sequence[float], n: int) -> list:
    out = []
    for x in lengths:
        if isinstance(x, complex):
            raise ValueError("boundary lengths must be real")
        if hasattr(x, "imag") and not isinstance(x, (int, float)) and getattr(x, "imag", 0):
            raise ValueError("boundary lengths must be real")
        xf = mpmath.mpf(x)
        if not mpmath.isfinite(xf) or xf < 0:
            raise ValueError("boundary lengths must be finite and non-negative")
        out.append(xf)
    if len(out) > n:
        raise ValueError("more lengths than boundary components")
    return out


def _sum_terms(terms, lengths, precision_bits: int):
    with mpmath.workprec(precision_bits + 24):
        sq = [x * x for x in lengths]
        total = mpmath.mpf(0)
        for c, perms in terms:
            cf = pi_to_float(c, precision_bits + 24)
            mono = mpmath.mpf(0)
            for p in perms:
                t = mpmath.mpf(1)
                for s, e in zip(sq, p):
                    if e:
                        t *= s**e
                mono += t
            total += cf * mono
    with mpmath.workprec(precision_bits):
        return +total


def volume_polynomial(g: int, n: int, table: BracketTable | None = None) -> VolumePolynomial:
    """Complete exact polynomial V_{g,n}(L)."""
    _require_stable(g, n)
    top = 3 * g - 3 + n
    coeffs = {}
    for ms in _sorted_multisets(n, top):
        b = tau_bracket(g, ms, table)
        if b.is_zero():
            continue
        w = Fraction(1)
        for di in ms:
            w *= length_weight(di)
        coeffs[ms] = b * w
    return VolumePolynomial(g, n, coeffs)


def volume_eval(g: int, n: int, lengths: Sequence[float], precision_bits: int = 53,
                table: BracketTable | None = None):
    """V_{g,n}(L_1, ..., L_k, 0, ..., 0) as an mpf rounded to precision_bits.

    Only brackets supported on the first k points are computed, which keeps
    single-boundary evaluations cheap at large n.
    """
    _require_stable(g, n)
    lengths = _check_lengths(lengths, n)
    k = len(lengths)
    top = 3 * g - 3 + n
    terms = []
    for ms in _sorted_multisets(k, top):
        b = tau_bracket(g, ms + (0,) * (n - k), table)
        if b.is_zero():
            continue
        w = Fraction(1)
        for di in ms:
            w *= length_weight(di)
        terms.append((b * w, _distinct_perms(ms)))
    return _sum_terms(terms, lengths, precision_bits)


def boundary_profile(g: int, n_cusps: int, table: BracketTable | None = None) -> list[PiMonomial]:
    """Coefficients c_d of V_{g, n_cusps + 1}(0, ..., 0, x) = sum_d c_d x^{2d}."""
    n = n_cusps + 1
    _require_stable(g, n)
    top = 3 * g - 3 + n
    return [tau_bracket(g, (0,) * n_cusps + (d,), table) * length_weight(d) for d in range(top + 1)]


def two_boundary_profile(g: int, n_cusps: int, table: BracketTable | None = None) -> dict:
    """Coefficients c_{a,b} of V_{g, n_cusps + 2}(0, ..., x, y) in x^{2a} y^{2b}."""
    n = n_cusps + 2
    _require_stable(g, n)
    top = 3 * g - 3 + n
    out = {}
    for a in range(top + 1):
        for b in range(top + 1 - a):
            br = tau_bracket(g, (0,) * n_cusps + (a, b), table)
            if not br.is_zero():
                out[(a, b)] = br * length_weight(a) * length_weight(b)
    return out


# -- validators ------------------------------------------------------------

def _labelled_splits(d: tuple[int, ...]):
    idx = range(len(d))
    for r in range(len(d) + 1):
        for I in itertools.combinations(idx, r):
            J = [d[j] for j in idx if j not in I]
            yield tuple(d[i] for i in I), tuple(J)


def check_one_boundary_recursion(g: int, ell: int, d: Sequence[int], table: BracketTable | None = None) -> bool:
    """Exact check of the three-term bracket recursion

    [t0^2 t_{l+1} t_d]_{g,n+3} = [t0^4 t_l t_d]_{g-1,n+5}
        + 8 sum [t0^2 t_l t_I]_{g1} [t0^2 t_J]_{g2}
        + 4 sum [t0 t_l t_I]_{g1} [t0^3 t_J]_{g2}

    summed over labelled splittings I + J = d and g1 + g2 = g.  Unstable
    factors are zero.
    """
    d = tuple(int(x) for x in d)
    br = lambda gg, idx: tau_bracket(gg, idx, table)
    lhs = PiPolynomial([br(g, (0, 0, ell + 1) + d)])
    rhs = PiPolynomial()
    if g >= 1:
        rhs = rhs + br(g - 1, (0, 0, 0, 0, ell) + d)
    for I, J in _labelled_splits(d):
        for g1 in range(g + 1):
            g2 = g - g1
            rhs = rhs + 8 * (br(g1, (0, 0, ell) + I) * br(g2, (0, 0) + J))
            rhs = rhs + 4 * (br(g1, (0, ell) + I) * br(g2, (0, 0, 0) + J))
    return lhs == rhs


def sinh_bound_ratio(g: int, n: int, lengths: Sequence[float], precision_bits: int = 53,
                     table: BracketTable | None = None) -> tuple:
    """(V(L)/V, prod sinh(L_i/2)/(L_i/2))"""
    lengths = _check_lengths(lengths, n)
    with mpmath.workprec(precision_bits + 24):
        num = volume_eval(g, n, lengths, precision_bits + 24, table)
        den = pi_to_float(volume_const(g, n, table), precision_bits + 24)
        bound = mpmath.mpf(1)
        for x in lengths:
            if x:
                bound *= mpmath.sinh(x / 2) / (x / 2)
        ratio = num / den
    return ratio, bound


def check_sinh_bound(g: int, n: int, lengths: Sequence[float], precision_bits: int = 53,
                     table: BracketTable | None = None) -> bool:
    ratio, bound = sinh_bound_ratio(g, n, lengths, precision_bits, table)
    return bool(ratio <= bound * (1 + mpmath.mpf(10) ** -10))


@dataclass
class ComparisonReport:
    ratios: dict  # (g, n) -> (2g-2+n) V_{g,n} / V_{g,n+1}
    comparisons: dict  # (g, n) -> V_{g,n+4} <= V_{g-1,n+2}, as literally stated
    transposed: dict  # (g, n) -> V_{g-1,n+4} <= V_{g,n+2}
    b0: float
    b1: float

    @property
    def all_hold(self) -> bool:
        return all(self.comparisons.values())

    @property
    def all_transposed_hold(self) -> bool:
        return all(self.transposed.values())


def check_volume_comparisons(g_max: int, n_max: int,
                             table: BracketTable | None = None) -> ComparisonReport:
    """Empirical b0, b1 and both readings of the genus-for-cusps comparison.

    The literal form V_{g,n+4} <= V_{g-1,n+2} is false on every grid point;
    the transposed form V_{g-1,n+4} <= V_{g,n+2} is the one that holds.
    """
    vol = lambda g, n: float(pi_to_float(volume_const(g, n, table), 64))
    ratios = {}
    for g in range(g_max + 1):
        for n in range(n_max + 1):
            if 2 * g - 2 + n <= 0:
                continue
            ratios[(g, n)] = (2 * g - 2 + n) * vol(g, n) / vol(g, n + 1)
    comps = {}
    swapped = {}
    for g in range(1, g_max + 1):
        for n in range(n_max + 1):
            if 2 * (g - 1) + n + 2 > 2:
                comps[(g, n)] = vol(g, n + 4) <= vol(g - 1, n + 2)
            if 2 * g + n + 2 > 2:
                swapped[(g, n)] = vol(g - 1, n + 4) <= vol(g, n + 2)
    vals = list(ratios.values())
    return ComparisonReport(ratios, comps, swapped, min(vals), max(vals))


# -- genus-zero stream -------------------------------------------------------

def genus0_normalized(n_max: int) -> list[Fraction]:
    """a_n = V_{0,n} (n-3)! / (2 pi^2)^{n-3} for n = 3..n_max, exactly.

    Uses the genus-zero quadratic recursion for volumes with cusps:
    a_n = 1/2 sum_{i=1}^{n-3} i (n-i-2)/(n-1) C(n-4,i-1) C(n,i+1) a_{i+2} a_{n-i}.
    """
    if n_max < 3:
        raise ValueError("n_max must be at least 3")
    a = {3: Fraction(1)}
    for n in range(4, n_max + 1):
        s = 0
        for i in range(1, n - 2):
            s += (i * (n - i - 2) * comb(n - 4, i - 1) * comb(n, i + 1)) * a[i + 2] * a[n - i]
        a[n] = s / (2 * (n - 1))
    return [a[n] for n in range(3, n_max + 1)]


def genus0_scaled(n_max: int, rho: float) -> np.ndarray:
    """alpha_n = V_{0,n} rho^{n-2} / ((2 pi^2)^{n-3} (n-2)!) for n = 3..n_max.

    Float recursion; with rho near x0 the values decay like n^{-3/2} instead
    of growing factorially, so double precision holds to large n.
    """
    if n_max < 3:
        raise ValueError("n_max must be at least 3")
    alpha = np.zeros(n_max + 1)
    alpha[3] = rho
    for n in range(4, n_max + 1):
        i = np.arange(1, n - 2, dtype=float)
        w = i * (n - i - 2) / ((i + 1) * (n - i - 1))
        left = alpha[3 : n]  # alpha_{i+2}
        right = alpha[n - 1 : 2 : -1]  # alpha_{n-i}
        alpha[n] = n / (2.0 * (n - 3)) * math.fsum(w * left * right)
    return alpha[3:]


_STREAM_RHO = 0.625


def genus0_volume_stream(n_max: int, mode: str = "exact"):
    """V_{0,3}, ..., V_{0,n_max}.

    ``exact`` returns PiMonomials; ``float`` returns mpf values recovered from
    the scaled float recursion (mpf avoids overflow of the raw volumes).
    """
    if mode == "exact":
        return [PiMonomial(a / factorial(n - 3) * 2 ** (n - 3), n - 3)
                for n, a in zip(range(3, n_max + 1), genus0_normalized(n_max))]
    if mode == "float":
        alpha = genus0_scaled(n_max, _STREAM_RHO)
        out = []
        with mpmath.workprec(80):
            tp2 = 2 * mpmath.pi**2
            rho = mpmath.mpf(_STREAM_RHO)
            for n, al in zip(range(3, n_max + 1), alpha):
                out.append(mpmath.mpf(al) * tp2 ** (n - 3) * mpmath.factorial(n - 2) / rho ** (n - 2))
        return out
    raise ValueError("mode must be 'exact' or 'float'")
