"""Limit constants and convergence reports for large-n volume asymptotics.

Tail fit used by every report: with the last three entries
``(n1, v1), (n2, v2), (n3, v3)`` assume ``v_n = L + c n^p`` (p < 0).  The two
increments ``D1 = v2 - v1`` and ``D2 = v3 - v2`` fix p through

    D2 / D1 = (n3^p - n2^p) / (n2^p - n1^p),

solved by bracketing on p, then ``c = D2 / (n3^p - n2^p)`` and
``L = v3 - c n3^p``.  The fit is a pure function of the entries.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np
from scipy.optimize import brentq

from .bessel import BesselContext, bessel_I0, make_context
from .exactnum import pi_to_float
from .volumes import (
    BracketTable,
    genus0_scaled,
    genus0_volume_stream,
    tau_bracket,
    volume_const,
    volume_eval,
)


@dataclass
class Entry:
    n: int
    exact: float
    prediction: float
    residual: float


@dataclass
class ConvergenceReport:
    entries: list[Entry]
    fitted_tail_exponent: float = math.nan
    extrapolated_limit: float = math.nan
    fit_window: tuple[int, int] | None = None
    truncated: bool = False
    meta: dict = field(default_factory=dict)

    def refit(self) -> "ConvergenceReport":
        p, L, win = tail_fit([e.n for e in self.entries], [e.exact for e in self.entries])
        self.fitted_tail_exponent, self.extrapolated_limit, self.fit_window = p, L, win
        return self

    def rows(self) -> list[tuple]:
        return [(e.n, e.exact, e.prediction, e.residual) for e in self.entries]


def tail_fit(ns: Sequence[int], values: Sequence[float]) -> tuple[float, float, tuple | None]:
    """(exponent p, limit L, (n1, n3)) from the last three points; nan if ill-posed."""
    if len(ns) < 3:
        return math.nan, math.nan, None
    (n1, n2, n3), (v1, v2, v3) = ns[-3:], values[-3:]
    win = (n1, n3)
    D1, D2 = v2 - v1, v3 - v2
    if D1 == 0 or D2 == 0 or (D1 > 0) != (D2 > 0):
        return math.nan, math.nan, win
    target = D2 / D1

    def h(p: float) -> float:
        return (n3**p - n2**p) / (n2**p - n1**p) - target

    lo, hi = -30.0, -1e-9
    try:
        if h(lo) * h(hi) > 0:
            return math.nan, math.nan, win
        p = brentq(h, lo, hi, xtol=1e-14, rtol=1e-14)
    except (ValueError, ZeroDivisionError, OverflowError):
        return math.nan, math.nan, win
    c = D2 / (n3**p - n2**p)
    return p, v3 - c * n3**p, win


def _ctx(ctx: BesselContext | None) -> BesselContext:
    return ctx if ctx is not None else make_context()


def gamma_half_ratio(ell: int) -> Fraction:
    """Gamma(l + 1/2) / (sqrt(pi) Gamma(l + 1)) = prod_{m<=l} (2m-1)/(2m)."""
    r = Fraction(1)
    for m in range(1, ell + 1):
        r *= Fraction(2 * m - 1, 2 * m)
    return r


def C_const(ell: int, ctx: BesselContext | None = None) -> float:
    """Limit of [tau_0^{n-1} tau_l]_{g,n} / V_{g,n}."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    if ell == 0:
        return 1.0
    c = _ctx(ctx)
    with mpmath.workprec(c.precision_bits):
        r = gamma_half_ratio(ell)
        v = (c.j0 / mpmath.pi) ** (2 * ell) * (2 * ell + 1) * mpmath.mpf(r.numerator) / r.denominator
    return float(v)


def A_exact(ell: int) -> Fraction:
    """A_l = 4(2l+1)/(l+1) A_{l-1}, A_0 = 1 (always an integer)."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    a = Fraction(1)
    for m in range(1, ell + 1):
        a *= Fraction(4 * (2 * m + 1), m + 1)
    return a


def A_const(ell: int, ctx: BesselContext | None = None) -> float:
    return float(A_exact(ell))


def series_target(ctx: BesselContext | None = None) -> float:
    """S = j0^2 / (8 pi^2), the value of Phi_0'' at x0."""
    c = _ctx(ctx)
    with mpmath.workprec(c.precision_bits):
        return float(c.j0**2 / (8 * mpmath.pi**2))


def C_recurrence_check(ell_max: int, ctx: BesselContext | None = None, rtol: float = 1e-10) -> bool:
    """C_{l+1} = 8 S C_l + 4 A_l S^{l+1} for all l <= ell_max."""
    c = _ctx(ctx)
    with mpmath.workprec(c.precision_bits):
        S = c.j0**2 / (8 * mpmath.pi**2)
        for ell in range(ell_max + 1):
            lhs = mpmath.mpf(C_const(ell + 1, c))
            rhs = 8 * S * C_const(ell, c) + 4 * mpmath.mpf(A_exact(ell).numerator) * S ** (ell + 1)
            if abs(lhs - rhs) > rtol * abs(lhs):
                return False
    return True


def phi0_dd_partial(N: int, x: float, volumes: Sequence | None = None,
                    ctx: BesselContext | None = None) -> float:
    """sum_{i=0}^N V_{0,i+3} x^{i+1} / ((2 pi^2)^{i+1} (i+1)!), ascending."""
    if N < 0:
        raise ValueError("N must be non-negative")
    if x <= 0:
        raise ValueError("x must be positive")
    vols = volumes if volumes is not None else genus0_volume_stream(N + 3, "float")
    if len(vols) < N + 1:
        raise ValueError("volume stream too short")
    with mpmath.workprec(96):
        tp2 = 2 * mpmath.pi**2
        xm = mpmath.mpf(x)
        total = mpmath.mpf(0)
        for i in range(N + 1):
            v = vols[i]
            v = pi_to_float(v, 96) if hasattr(v, "pi2_power") else mpmath.mpf(v)
            total += v * xm ** (i + 1) / (tp2 ** (i + 1) * mpmath.factorial(i + 1))
    return float(total)


@dataclass
class SeriesSum:
    value: float
    terms: int
    truncated: bool


def phi_ell_dd_partial(ell: int, N: int, x: float, max_points: int = 30,
                       table: BracketTable | None = None) -> SeriesSum:
    """sum_{i=0}^N [tau_0^{i+2} tau_l]_{0,i+3} x^{i+1} / ((2 pi^2)^{i+1} (i+1)!).

    Terms needing more than ``max_points`` marked points are dropped and the
    result is flagged as truncated.
    """
    if N < 0 or ell < 0:
        raise ValueError("N and ell must be non-negative")
    last = min(N, max_points - 3)
    with mpmath.workprec(96):
        tp2 = 2 * mpmath.pi**2
        xm = mpmath.mpf(x)
        total = mpmath.mpf(0)
        for i in range(last + 1):
            b = tau_bracket(0, (0,) * (i + 2) + (ell,), table)
            total += pi_to_float(b, 96) * xm ** (i + 1) / (tp2 ** (i + 1) * mpmath.factorial(i + 1))
    return SeriesSum(float(total), last + 1, last < N)


def _ratio(num, den) -> float:
    with mpmath.workprec(96):
        return float(pi_to_float(num, 96) / pi_to_float(den, 96))


def ratio_table(g: int, d: Sequence[int], n_range: Iterable[int],
                ctx: BesselContext | None = None, budget_seconds: float | None = None,
                table: BracketTable | None = None) -> ConvergenceReport:
    """[tau_0^{n-k} tau_d]_{g,n} / V_{g,n} against prod C_{d_i}."""
    c = _ctx(ctx)
    d = tuple(d)
    pred = 1.0
    for di in d:
        pred *= C_const(di, c)
    start = time.monotonic()
    entries: list[Entry] = []
    truncated = False
    for n in n_range:
        if n < len(d) or 2 * g + n <= 2:
            continue
        if budget_seconds is not None and time.monotonic() - start > budget_seconds:
            truncated = True
            break
        r = _ratio(tau_bracket(g, (0,) * (n - len(d)) + d, table), volume_const(g, n, table))
        entries.append(Entry(n, r, pred, r - pred))
    rep = ConvergenceReport(entries, truncated=truncated,
                            meta={"genus": g, "d": list(d), "what": "ratio-C"})
    return rep.refit()


def i0_prediction(lengths: Sequence[float], ctx: BesselContext | None = None) -> float:
    c = _ctx(ctx)
    with mpmath.workprec(c.precision_bits):
        p = mpmath.mpf(1)
        for x in lengths:
            p *= bessel_I0(c.j0 * mpmath.mpf(x) / (2 * mpmath.pi), c.precision_bits)
    return float(p)


def i0_ratio_table(g: int, lengths: Sequence[float], n_range: Iterable[int],
                   ctx: BesselContext | None = None, budget_seconds: float | None = None,
                   table: BracketTable | None = None) -> ConvergenceReport:
    """V_{g,n}(L, 0...) / V_{g,n} against prod I_0(j0 L_i / 2 pi)."""
    pred = i0_prediction(lengths, ctx)
    start = time.monotonic()
    entries: list[Entry] = []
    truncated = False
    for n in n_range:
        if n < len(lengths) or 2 * g + n <= 2:
            continue
        if budget_seconds is not None and time.monotonic() - start > budget_seconds:
            truncated = True
            break
        with mpmath.workprec(96):
            r = float(volume_eval(g, n, lengths, 96, table) / pi_to_float(volume_const(g, n, table), 96))
        entries.append(Entry(n, r, pred, r - pred))
    rep = ConvergenceReport(entries, truncated=truncated,
                            meta={"genus": g, "lengths": list(map(float, lengths)), "what": "i0-ratio"})
    return rep.refit()


def manin_zograf_estimate(g: int, n: int, volume, x0) -> float:
    """V_{g,n} x0^n / ((2 pi^2)^{3g+n-3} n! (n+1)^{(5g-7)/2})."""
    with mpmath.workprec(96):
        v = pi_to_float(volume, 96) if hasattr(volume, "pi2_power") else mpmath.mpf(volume)
        est = (v * mpmath.mpf(x0) ** n
               / ((2 * mpmath.pi**2) ** (3 * g + n - 3) * mpmath.factorial(n)
                  * mpmath.mpf(n + 1) ** (mpmath.mpf(5 * g - 7) / 2)))
    return float(est)


def manin_zograf_fit(g: int, n_range: Iterable[int], volumes: dict | None = None,
                     ctx: BesselContext | None = None,
                     table: BracketTable | None = None) -> tuple[float, ConvergenceReport]:
    """Estimates of the Manin-Zograf constant B_g with their Cauchy differences.

    Entries carry the estimate as ``exact``; ``residual`` is the difference
    to the previous estimate (nan for the first) and ``prediction`` is nan
    because no closed form exists.  Genus zero uses the float stream.
    """
    c = _ctx(ctx)
    ns = [n for n in n_range if 2 * g + n > 2]
    if g == 0 and volumes is None and ns:
        stream = genus0_volume_stream(max(ns), "float")
        volumes = {n: stream[n - 3] for n in ns}
    entries: list[Entry] = []
    prev = math.nan
    for n in ns:
        v = volumes[n] if volumes is not None and n in volumes else volume_const(g, n, table)
        b = manin_zograf_estimate(g, n, v, c.x0)
        entries.append(Entry(n, b, math.nan, b - prev))
        prev = b
    rep = ConvergenceReport(entries, meta={"genus": g, "what": "mz-fit"}).refit()
    B = rep.extrapolated_limit
    if not math.isfinite(B) and entries:
        B = entries[-1].exact
    return B, rep


def manin_zograf_series(N: int, ctx: BesselContext | None = None) -> ConvergenceReport:
    """Partial sums of sum_i V_{0,i+3} x0^{i+1} / ((2 pi^2)^i (i+1)!) toward j0^2/4.

    Summands come from the genus-zero recursion scaled by x0, in which the
    n-th scaled value is exactly the summand with i = n - 3.
    """
    c = _ctx(ctx)
    alpha = genus0_scaled(N + 3, float(c.x0))
    target = float(c.j0) ** 2 / 4
    entries = []
    total = 0.0
    for i in range(N + 1):
        total = total + float(alpha[i])
        entries.append(Entry(i, total, target, total - target))
    return ConvergenceReport(entries, meta={"what": "mz-series", "N": N}).refit()
