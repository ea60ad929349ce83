"""Check batteries behind ``wpvl verify``.

Each check is a zero-argument callable returning ``(passed, detail)``.  A
suite runs its checks in order until the time budget runs out; unrun checks
are reported as skipped.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Callable

from . import asymptotics as asy
from . import geostats as gs
from .bessel import make_context
from .exactnum import PiMonomial, PiPolynomial, pi_to_float
from .psi import TauKey, check_dilaton, check_string, psi_intersection
from .volumes import (
    check_one_boundary_recursion,
    check_sinh_bound,
    check_volume_comparisons,
    genus0_volume_stream,
    tau_bracket,
    volume_const,
)


@dataclass
class Check:
    name: str
    anchor: str
    run: Callable[[], tuple[bool, str]]


def top_degree_keys(g_max: int, n_max: int):
    for g in range(g_max + 1):
        for n in range(1, n_max + 1):
            if 2 * g - 2 + n <= 0:
                continue
            D = 3 * g - 3 + n
            for d in _multisets(n, D):
                yield TauKey(g, d)


def _multisets(n: int, total: int):
    """Sorted n-tuples of non-negative ints summing to total."""
    def rec(prefix, lo, remaining, slots):
        if slots == 1:
            if remaining >= lo:
                yield tuple(prefix) + (remaining,)
            return
        for v in range(lo, remaining // slots + 1):
            yield from rec(prefix + [v], v, remaining - v, slots - 1)
    if n == 0:
        if total == 0:
            yield ()
        return
    yield from rec([], 0, total, n)


def string_dilaton_grid(g_max: int = 3, n_max: int = 8) -> tuple[bool, str]:
    checked = 0
    for key in top_degree_keys(g_max, n_max):
        if 0 in key.indices:
            if not check_string(key):
                return False, f"string equation fails at {key.render()}"
            checked += 1
        if 1 in key.indices:
            if not check_dilaton(key):
                return False, f"dilaton equation fails at {key.render()}"
            checked += 1
    return True, f"{checked} equations"


def one_boundary_recursion_grid(g_max: int = 2, ell_max: int = 3, entry_max: int = 2, size_max: int = 3):
    checked = 0
    for g in range(g_max + 1):
        for ell in range(ell_max + 1):
            for k in range(size_max + 1):
                for d in itertools.combinations_with_replacement(range(entry_max + 1), k):
                    if not check_one_boundary_recursion(g, ell, d):
                        return False, f"fails at g={g} l={ell} d={d}"
                    checked += 1
    return True, f"{checked} identities"


def tau1_convolution(n_max: int = 14) -> tuple[bool, str]:
    """[tau_0^{n-1} tau_1]_{0,n} = 12 sum_i C(n-3,i) V_{0,i+3} V_{0,n-i-1}."""
    for n in range(4, n_max + 1):
        lhs = PiPolynomial([tau_bracket(0, (0,) * (n - 1) + (1,))])
        rhs = PiPolynomial()
        for i in range(n - 3):
            rhs = rhs + volume_const(0, i + 3) * volume_const(0, n - i - 1) * (12 * comb(n - 3, i))
        if lhs != rhs:
            return False, f"fails at n={n}"
    return True, f"n = 4..{n_max}"


def genus0_multinomial(n_max: int = 12) -> tuple[bool, str]:
    checked = 0
    for n in range(3, n_max + 1):
        for d in _multisets(n, n - 3):
            expect = Fraction(factorial(n - 3))
            for di in d:
                expect /= factorial(di)
            if psi_intersection(0, d) != expect:
                return False, f"fails at d={d}"
            checked += 1
    return True, f"{checked} values"


KNOWN_VOLUMES = {
    (0, 3): "1/1*pi^0",
    (0, 4): "2/1*pi^2",
    (0, 5): "10/1*pi^4",
    (0, 6): "244/3*pi^6",
    (0, 7): "2758/3*pi^8",
    (1, 1): "1/12*pi^2",
    (1, 2): "1/4*pi^4",
}


def known_volumes() -> tuple[bool, str]:
    for (g, n), text in KNOWN_VOLUMES.items():
        if volume_const(g, n) != PiMonomial.parse(text):
            return False, f"V_{g},{n} = {volume_const(g, n).render()}"
    return True, f"{len(KNOWN_VOLUMES)} values"


def bracket_bound(g_max: int = 2, n_max: int = 6) -> tuple[bool, str]:
    checked = 0
    for g in range(g_max + 1):
        for n in range(1, n_max + 1):
            if 2 * g + n <= 2:
                continue
            V = float(pi_to_float(volume_const(g, n), 64))
            for total in range(3 * g - 3 + n + 1):
                for d in _multisets(n, total):
                    b = float(pi_to_float(tau_bracket(g, d), 64))
                    if not (0 <= b <= V * (1 + 1e-12)):
                        return False, f"bracket exceeds volume at g={g} d={d}"
                    checked += 1
    return True, f"{checked} brackets"


def sinh_samples() -> tuple[bool, str]:
    cases = [(0, 10, [1.0]), (0, 6, [0, 0, 0]), (1, 5, [2.0, 3.0]), (0, 8, [0.5, 1.5, 2.5]), (2, 2, [4.0])]
    for g, n, ls in cases:
        if not check_sinh_bound(g, n, ls):
            return False, f"fails at {(g, n, ls)}"
    return True, f"{len(cases)} cases"


def comparisons() -> tuple[bool, str]:
    rep = check_volume_comparisons(2, 8)
    literal = sum(rep.comparisons.values())
    return rep.all_transposed_hold and rep.b0 > 0, (
        f"V_(g-1,n+4) <= V_(g,n+2) on all {len(rep.transposed)} points; "
        f"literal V_(g,n+4) <= V_(g-1,n+2) holds on {literal}/{len(rep.comparisons)}; "
        f"b0={rep.b0:.6g} b1={rep.b1:.6g}")


def identities_suite() -> list[Check]:
    return [
        Check("known volumes", "genus-0 set-partition oracle and orbifold V_1,1", known_volumes),
        Check("string and dilaton", "string/dilaton equations, g<=3 n<=8", string_dilaton_grid),
        Check("genus-0 multinomial", "<prod tau_di>_0 = (n-3)!/prod di!, n<=12", genus0_multinomial),
        Check("three-term bracket recursion", "one-boundary bracket recursion on g<=2, l<=3, d_i<=2", one_boundary_recursion_grid),
        Check("tau_1 convolution", "[tau_0^(n-1) tau_1] = 12 sum C(n-3,i) V V, n<=14", tau1_convolution),
        Check("bracket bound", "0 <= [tau_d] <= V_(g,n)", bracket_bound),
        Check("sinh bound", "V(L)/V <= prod sinh(L/2)/(L/2)", sinh_samples),
        Check("volume comparisons", "genus-for-cusps volume comparison", comparisons),
    ]


def _c_ladder():
    ctx = make_context()
    cs = [asy.C_const(l, ctx) for l in range(21)]
    ok = cs[0] == 1.0 and all(c <= 1 for c in cs) and all(a > b for a, b in zip(cs[1:], cs[2:]))
    return ok and asy.C_recurrence_check(20, ctx), f"C_1={cs[1]:.6f}"


def _phi0_series():
    ctx = make_context()
    x0 = float(ctx.x0)
    stream = genus0_volume_stream(303, "float")
    S = asy.series_target(ctx)
    sums = [asy.phi0_dd_partial(N, x0, stream) for N in (0, 10, 50, 100, 200, 300)]
    ok = all(a < b for a, b in zip(sums, sums[1:])) and sums[-1] <= S + 1e-3
    return ok, f"partial(300)={sums[-1]:.6f} target={S:.6f}"


def _mz_series():
    rep = asy.manin_zograf_series(120)
    vals = [e.exact for e in rep.entries]
    ok = (all(a < b for a, b in zip(vals, vals[1:]))
          and -0.75 <= rep.fitted_tail_exponent <= -0.25
          and abs(rep.extrapolated_limit / 1.445796 - 1) < 0.01)
    return ok, f"p={rep.fitted_tail_exponent:.4f} limit={rep.extrapolated_limit:.6f}"


def _ratio_trend():
    rep = asy.ratio_table(0, [1], range(4, 15))
    res = [abs(e.residual) for e in rep.entries]
    ok = all(a > b for a, b in zip(res[2:], res[3:]))
    return ok, f"final residual {rep.entries[-1].residual:.5f}, limit {rep.extrapolated_limit:.5f}"


def _i0_sandwich():
    rep = asy.i0_ratio_table(0, [1.0], [8, 12, 16, 20])
    ok = all(1 <= e.exact <= 1.0421906 for e in rep.entries)
    res = [abs(e.exact - 1.036958) for e in rep.entries]
    ok = ok and all(a >= b for a, b in zip(res, res[1:]))
    return ok, ", ".join(f"{e.n}:{e.exact:.6f}" for e in rep.entries)


def asymptotics_suite() -> list[Check]:
    return [
        Check("C ladder", "closed form C_l and its recurrence to l=20", _c_ladder),
        Check("Phi_0'' partial sums", "monotone, bounded by j0^2/8pi^2 + 1e-3", _phi0_series),
        Check("Manin-Zograf series", "partial sums toward j0^2/4", _mz_series),
        Check("tau_1 ratio trend", "[tau_0^(n-1) tau_1]/V toward C_1", _ratio_trend),
        Check("I_0 ratio sandwich", "V(1)/V within sinh bound, toward I_0(j0/2pi)", _i0_sandwich),
    ]


def _systole():
    v = gs.expected_systole_constant()
    return abs(v - 0.42250) <= 1e-4, f"{v:.6f}"


def _triangle():
    a, b = gs.expected_systole_constant(), gs.systole_quadrature()
    return abs(a - b) <= 1e-4, f"closed={a:.8f} quad={b:.8f}"


def _poisson():
    v = gs.poisson_mean(0, 1)
    return abs(v - 4.400) <= 1e-3, f"{v:.6f}"


def _growth():
    c0 = gs.simple_growth_exponent()
    fit = gs.simple_growth_fit()
    return c0 < 1 and abs(fit - c0) < 0.01, f"c0={c0:.6f} fit={fit:.6f}"


def _two_cusp_trend():
    dens = gs.two_cusp_limit_density(0.5)
    res = [abs(gs.expected_two_cusp_count(0, n, 0.5) / n - dens) for n in range(8, 21)]
    return all(a > b for a, b in zip(res, res[1:])), f"final residual {res[-1]:.3g}"


def _f_monotone():
    vals = [gs.f_limit(L) for L in (0.0, 0.25, 0.5, 1.0)]
    return all(a <= b for a, b in zip(vals, vals[1:])), f"f(1)={vals[-1]:.6g}"


def stats_suite() -> list[Check]:
    return [
        Check("expected systole", "constant approx 0.4225", _systole),
        Check("systole quadrature", "int_0^inf exp(-lambda(0,x)) dx", _triangle),
        Check("Poisson mean", "lambda_[0,1]", _poisson),
        Check("growth exponent", "c0 = j0/2pi + 1/2 < 1", _growth),
        Check("two-cusp density trend", "E[N_2]/n toward (x0/4pi^2) int x I_0", _two_cusp_trend),
        Check("f monotone", "f(L) non-decreasing", _f_monotone),
    ]


SUITES = {"identities": identities_suite, "asymptotics": asymptotics_suite, "stats": stats_suite}


def run_suite(name: str, budget_seconds: float | None = None) -> tuple[list[dict], bool]:
    """Returns (check records, budget_exhausted)."""
    checks = SUITES[name]()
    start = time.monotonic()
    out = []
    exhausted = False
    for chk in checks:
        if budget_seconds is not None and time.monotonic() - start > budget_seconds:
            exhausted = True
            out.append({"name": chk.name, "anchor": chk.anchor, "status": "skipped", "detail": ""})
            continue
        t = time.monotonic()
        try:
            ok, detail = chk.run()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append({"name": chk.name, "anchor": chk.anchor, "status": "pass" if ok else "fail",
                    "detail": detail, "seconds": round(time.monotonic() - t, 3)})
    return out, exhausted
