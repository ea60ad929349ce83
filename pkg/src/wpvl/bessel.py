"""Bessel functions J_n, I_0 and the constants j0, x0 built from them.

Both functions are summed from their power series in mpmath.  J_n alternates,
so the working precision carries extra guard bits proportional to |x| to
absorb the cancellation (the largest term is about e^{|x|}).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath

I0_MAX_ARG = 100.0


def _series(order: int, x, sign: int, prec: int):
    # sum_k sign^k (x/2)^{2k+order} / (k! (k+order)!)
    with mpmath.workprec(prec):
        x = mpmath.mpf(x)
        h = x / 2
        term = h**order / mpmath.factorial(order)
        total = term
        q = h * h
        eps = mpmath.mpf(2) ** (-prec)
        k = 0
        while True:
            k += 1
            term = term * q / (k * (k + order))
            if sign < 0:
                term = -term
            total += term
            if abs(term) <= eps * abs(total) and k > abs(float(h)):
                break
        return total


def bessel_J(order: int, x, precision_bits: int = 53):
    """J_order(x) for integer order >= 0, rounded to precision_bits."""
    if order < 0 or int(order) != order:
        raise ValueError("order must be a non-negative integer")
    xf = mpmath.mpf(x)
    if not mpmath.isfinite(xf):
        raise ValueError("x must be finite")
    guard = int(1.5 * abs(float(xf))) + 32
    val = _series(int(order), xf, -1, precision_bits + guard)
    with mpmath.workprec(precision_bits):
        return +val


def bessel_I0(x, precision_bits: int = 53):
    """I_0(x) for |x| <= 100."""
    xf = mpmath.mpf(x)
    if not mpmath.isfinite(xf) or abs(xf) > I0_MAX_ARG:
        raise ValueError(f"|x| must be at most {I0_MAX_ARG:g}")
    val = _series(0, xf, 1, precision_bits + 16)
    with mpmath.workprec(precision_bits):
        return +val


@dataclass(frozen=True)
class BesselContext:
    """First zero j0 of J_0 and the constants derived from it."""

    j0: mpmath.mpf
    x0: mpmath.mpf
    J1_at_j0: mpmath.mpf
    J3_at_j0: mpmath.mpf
    precision_bits: int

    @property
    def kappa(self):
        """1 - J_3(j0) / J_1(j0)"""
        with mpmath.workprec(self.precision_bits):
            return 1 - self.J3_at_j0 / self.J1_at_j0

    def f(self, name: str) -> float:
        """Float view of a field or property."""
        return float(getattr(self, name))


def _find_j0(prec: int):
    lo, hi = mpmath.mpf(2), mpmath.mpf(3)
    J0 = lambda t: _series(0, t, -1, prec + 40)
    flo = J0(lo)
    if flo * J0(hi) >= 0:
        raise ArithmeticError("no sign change of J_0 on [2, 3]")
    # bisection to a safe Newton basin, then Newton with J_0' = -J_1
    with mpmath.workprec(prec + 40):
        for _ in range(30):
            mid = (lo + hi) / 2
            fm = J0(mid)
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        t = (lo + hi) / 2
        tol = mpmath.mpf(2) ** (-(prec + 8))
        for _ in range(200):
            step = J0(t) / _series(1, t, -1, prec + 40)
            t = t + step
            if abs(step) <= tol * t:
                break
        return t


@lru_cache(maxsize=None)
def make_context(precision_bits: int = 128) -> BesselContext:
    """Context at the given precision; identical inputs give identical output."""
    if precision_bits < 53:
        raise ValueError("precision_bits must be at least 53")
    p = int(precision_bits)
    j0 = _find_j0(p)
    with mpmath.workprec(p + 40):
        J1 = _series(1, j0, -1, p + 40)
        # J_2 = (2/j0) J_1 and J_3 = (4/j0) J_2 - J_1 since J_0(j0) = 0
        J3 = (4 / j0) * ((2 / j0) * J1) - J1
        x0 = j0 * J1 / 2
    with mpmath.workprec(p):
        return BesselContext(+j0, +x0, +J1, +J3, p)
