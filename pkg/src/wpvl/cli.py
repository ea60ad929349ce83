"""Command-line interface: ``wpvl <command> ...``.

Every command prints one JSON document (tables may use CSV).  Exit codes:
0 success, 2 usage, 3 domain error, 4 budget exhausted, 5 cache mismatch.

Environment:
    WPVL_CACHE           cache file loaded before and written after a command
    WPVL_PRECISION_BITS  precision of the Bessel context (default 128)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from fractions import Fraction

import mpmath

from . import asymptotics as asy
from . import geostats as gs
from .bessel import make_context
from .cache import CacheMismatch, load_cache, read_cache, save_cache
from .exactnum import PiMonomial, pi_to_float
from .psi import DEFAULT_ENGINE
from .verify import SUITES, run_suite
from .volumes import DEFAULT_TABLE, convention_fingerprint, tau_bracket, volume_const, volume_eval

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_BUDGET, EXIT_CACHE = 0, 2, 3, 4, 5
VOLATILE_META = ("compute_millis", "cache_hits")


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


# -- argument helpers -------------------------------------------------------

def int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("indices must be non-negative")
    return vals


def float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def int_range(text: str) -> list[int]:
    """``a:b`` or ``a:b:step``, inclusive of b."""
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    if len(nums) == 1:
        return nums
    if len(nums) not in (2, 3) or (len(nums) == 3 and nums[2] <= 0):
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    step = nums[2] if len(nums) == 3 else 1
    return list(range(nums[0], nums[1] + 1, step))


def exact_json(v: PiMonomial) -> dict:
    return {"numerator": str(v.coeff.numerator), "denominator": str(v.coeff.denominator),
            "pi2_power": v.pi2_power}


def float_str(x, bits: int) -> str:
    digits = max(15, int(bits * math.log10(2)))
    return mpmath.nstr(x, digits) if not isinstance(x, float) else repr(x)


# -- envelope ----------------------------------------------------------------

class Run:
    def __init__(self, args) -> None:
        self.args = args
        self.start = time.monotonic()
        self.hits0 = DEFAULT_ENGINE.hits + DEFAULT_TABLE.hits
        self.warnings: list[str] = []

    def envelope(self, query: dict, exact: PiMonomial | None = None, value=None, **extra) -> dict:
        bits = self.args.precision_bits
        if exact is not None and value is None:
            value = pi_to_float(exact, bits)
        meta = {
            "cache_hits": DEFAULT_ENGINE.hits + DEFAULT_TABLE.hits - self.hits0,
            "compute_millis": round((time.monotonic() - self.start) * 1000, 3),
            "precision_bits": bits,
            "convention": convention_fingerprint(),
            "warnings": list(self.warnings),
        }
        meta.update(extra)
        if self.args.stable:
            for k in VOLATILE_META:
                meta.pop(k, None)
        return {
            "query": query,
            "exact": exact_json(exact) if exact is not None else None,
            "float": float_str(value, bits) if value is not None else None,
            "meta": meta,
        }


def emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


# -- commands ----------------------------------------------------------------

def cmd_intersect(args, run: Run) -> int:
    v = tau_bracket(args.genus, args.tau)
    emit(run.envelope({"command": "intersect", "genus": args.genus, "tau": sorted(args.tau)}, v))
    return EXIT_OK


def cmd_volume(args, run: Run) -> int:
    g, n = args.genus, args.n
    if 2 * g + n <= 2:
        raise DomainError(f"(g, n) = ({g}, {n}) is unstable: need 2g + n > 2")
    q = {"command": "volume", "genus": g, "n": n}
    if args.lengths:
        if len(args.lengths) > n:
            raise DomainError("more lengths than boundary components")
        if any(x < 0 or not math.isfinite(x) for x in args.lengths):
            raise DomainError("lengths must be finite and non-negative")
        q["lengths"] = args.lengths
        val = volume_eval(g, n, args.lengths, args.precision_bits)
        emit(run.envelope(q, None, val))
    else:
        emit(run.envelope(q, volume_const(g, n)))
    return EXIT_OK


def cmd_verify(args, run: Run) -> int:
    checks, exhausted = run_suite(args.suite, args.budget_seconds)
    passed = all(c["status"] == "pass" for c in checks)
    doc = {"suite": args.suite, "passed": passed and not exhausted,
           "budget_exhausted": exhausted, "checks": checks}
    if args.stable:
        for c in checks:
            c.pop("seconds", None)
    emit(doc)
    if exhausted:
        return EXIT_BUDGET
    return EXIT_OK if passed else 1


def _report_doc(rep: asy.ConvergenceReport) -> dict:
    return {
        "entries": [{"n": e.n, "exact": e.exact, "prediction": e.prediction, "residual": e.residual}
                    for e in rep.entries],
        "fitted_tail_exponent": rep.fitted_tail_exponent,
        "extrapolated_limit": rep.extrapolated_limit,
        "fit_window": list(rep.fit_window) if rep.fit_window else None,
        "truncated": rep.truncated,
        "meta": rep.meta,
    }


def cmd_table(args, run: Run) -> int:
    ctx = make_context(args.precision_bits)
    what = args.what
    if what == "ratio-C":
        if not args.d or not args.n:
            raise UsageError("ratio-C needs --d and --n")
        rep = asy.ratio_table(args.genus, args.d, args.n, ctx, args.budget_seconds)
    elif what == "i0-ratio":
        if not args.length or not args.n:
            raise UsageError("i0-ratio needs --length and --n")
        rep = asy.i0_ratio_table(args.genus, args.length, args.n, ctx, args.budget_seconds)
    elif what == "mz-fit":
        if not args.n:
            raise UsageError("mz-fit needs --n")
        _, rep = asy.manin_zograf_fit(args.genus, args.n, ctx=ctx)
    elif what == "mz-series":
        if args.N is None:
            raise UsageError("mz-series needs --N")
        rep = asy.manin_zograf_series(args.N, ctx)
    else:
        raise UsageError(f"unknown table {what!r}")
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "exact", "prediction", "residual"])
        for row in rep.rows():
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
        w.writerow(["fitted_exponent", repr(rep.fitted_tail_exponent)])
        w.writerow(["extrapolated_limit", repr(rep.extrapolated_limit)])
        sys.stdout.write(buf.getvalue())
    else:
        emit({"query": {"command": "table", "what": what}, "report": _report_doc(rep)})
    return EXIT_BUDGET if rep.truncated else EXIT_OK


def cmd_stats(args, run: Run) -> int:
    ctx = make_context(args.precision_bits)
    what = args.what
    q = {"command": "stats", "what": what}
    extra = {}
    if what == "systole":
        val = gs.expected_systole_constant(ctx)
        extra["quadrature_check"] = gs.systole_quadrature(ctx)
        run.warnings.append(gs.SYSTOLE_NOTE)
    elif what == "poisson":
        if args.a is None or args.b is None:
            raise UsageError("poisson needs --a and --b")
        q.update(a=args.a, b=args.b)
        try:
            val = gs.poisson_mean(args.a, args.b, ctx)
        except ValueError as exc:
            raise DomainError(str(exc))
        run.warnings.append(gs.SYSTOLE_NOTE)
    elif what == "f":
        if args.L is None:
            raise UsageError("f needs --L")
        q["L"] = args.L
        sc = gs.StatsContext(bessel=ctx)
        try:
            res = gs.f_limit_detail(args.L, sc)
        except ValueError as exc:
            raise DomainError(str(exc))
        val = res.value
        extra.update(series_terms=res.head_terms, tail_terms=res.tail_terms,
                     quadrature_nodes=res.quad_nodes, tail_value=res.tail_value,
                     remainder_value=res.remainder_value)
    elif what == "eigen":
        eps = 0.25 if args.eps is None else args.eps
        q["eps"] = eps
        try:
            c_eps, frac = gs.small_eigenvalue_constants(eps, ctx)
        except ValueError as exc:
            raise DomainError(str(exc))
        val = c_eps
        extra["fraction"] = frac
    elif what == "two-cusp":
        if args.L is None or args.n is None:
            raise UsageError("two-cusp needs --n and --L")
        n = args.n[0]
        q.update(genus=args.genus, n=n, L=args.L)
        try:
            val = gs.expected_two_cusp_count(args.genus, n, args.L)
        except ValueError as exc:
            raise DomainError(str(exc))
    else:
        raise UsageError(f"unknown statistic {what!r}")
    emit(run.envelope(q, None, val, **extra))
    return EXIT_OK


def cmd_cache(args, run: Run) -> int:
    path = args.path
    if args.action == "save":
        for g, n in args.warm or []:
            volume_const(g, n)
        count = save_cache(path)
        emit({"action": "save", "path": path, "entries": count})
    elif args.action == "load":
        count = load_cache(path)
        emit({"action": "load", "path": path, "entries": count})
    else:
        if path and os.path.exists(path):
            c = read_cache(path)
            entries, psi, br = len(c), len(c.psi), len(c.brackets)
        else:
            entries, psi, br = 0, 0, 0
        eng, tab = DEFAULT_ENGINE, DEFAULT_TABLE
        lookups = eng.hits + eng.misses + tab.hits + tab.misses
        emit({"action": "stats", "path": path, "entries": entries, "psi_entries": psi,
              "bracket_entries": br, "hit_rate": (eng.hits + tab.hits) / lookups if lookups else 0.0})
    return EXIT_OK


def warm_spec(text: str) -> tuple[int, int]:
    try:
        g, n = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected G:N, got {text!r}")
    return g, n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--stable", action="store_true", help="omit volatile metadata")
    common.add_argument("--cache", default=os.environ.get("WPVL_CACHE"),
                        help="cache file (default: $WPVL_CACHE)")
    common.add_argument("--precision-bits", "--prec", type=int,
                        default=int(os.environ.get("WPVL_PRECISION_BITS", "128")))

    p = argparse.ArgumentParser(prog="wpvl", description="Weil-Petersson volumes and asymptotics")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("intersect", parents=[common], help="normalized bracket [tau_d]_{g,n}")
    s.add_argument("-g", "--genus", type=int, required=True)
    s.add_argument("--tau", type=int_list, required=True)
    s.add_argument("--format", choices=["json"], default="json")
    s.set_defaults(func=cmd_intersect)

    s = sub.add_parser("volume", parents=[common], help="V_{g,n} or V_{g,n}(L...)")
    s.add_argument("-g", "--genus", type=int, required=True)
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--lengths", type=float_list)
    s.set_defaults(func=cmd_volume)

    s = sub.add_parser("verify", parents=[common], help="run a check battery")
    s.add_argument("--suite", choices=sorted(SUITES), required=True)
    s.add_argument("--budget-seconds", type=float)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("table", parents=[common], help="convergence tables")
    s.add_argument("--what", choices=["ratio-C", "i0-ratio", "mz-fit", "mz-series"], required=True)
    s.add_argument("-g", "--genus", type=int, default=0)
    s.add_argument("--d", type=int_list)
    s.add_argument("--n", type=int_range)
    s.add_argument("--N", type=int)
    s.add_argument("--length", type=float_list)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--budget-seconds", type=float)
    s.set_defaults(func=cmd_table)

    s = sub.add_parser("stats", parents=[common], help="geodesic statistics")
    s.add_argument("--what", choices=["f", "systole", "poisson", "eigen", "two-cusp"], required=True)
    s.add_argument("--L", type=float)
    s.add_argument("--a", type=float)
    s.add_argument("--b", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("-g", "--genus", type=int, default=0)
    s.add_argument("--n", type=int_range)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("cache", parents=[common], help="persistent cache")
    s.add_argument("action", choices=["save", "load", "stats"])
    s.add_argument("path", nargs="?")
    s.add_argument("--warm", type=warm_spec, action="append",
                   help="compute V_{G,N} before saving (repeatable)")
    s.set_defaults(func=cmd_cache)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with code 2 on usage errors
    if args.precision_bits < 53:
        parser.error("--precision-bits must be at least 53")
    if args.command == "cache":
        if args.path is None:
            args.path = args.cache
        if args.path is None and args.action != "stats":
            parser.error("cache save/load needs a path or $WPVL_CACHE")
    cache_path = args.cache if args.command != "cache" else None
    try:
        if cache_path and os.path.exists(cache_path):
            load_cache(cache_path)
        run = Run(args)
        code = args.func(args, run)
        if cache_path:
            save_cache(cache_path)
        return code
    except CacheMismatch as exc:
        sys.stderr.write(f"wpvl: cache rejected: {exc}\n")
        return EXIT_CACHE
    except UsageError as exc:
        sys.stderr.write(f"wpvl: {exc}\n")
        return EXIT_USAGE
    except (DomainError, ValueError) as exc:
        sys.stderr.write(f"wpvl: {exc}\n")
        return EXIT_DOMAIN
    except gs.BudgetExceeded as exc:
        sys.stderr.write(f"wpvl: {exc}\n")
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
