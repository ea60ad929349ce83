"""Pure psi-class intersection numbers via the DVV (Virasoro) recursion.

The recursion removes one unit from the largest index, so the string and
dilaton equations are never used to compute and stay available as
independent checks.  Values live in a memo table as ``gmpy2.mpq`` for speed;
the public API converts to :class:`fractions.Fraction`.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable

from gmpy2 import mpq

_ZERO = mpq(0)

# (2m-1)!! for m = 0, 1, ...; (-1)!! = 1
_DF: list[int] = [1]


def dfact(m: int) -> int:
    """(2m-1)!!"""
    while len(_DF) <= m:
        k = len(_DF)
        _DF.append(_DF[-1] * (2 * k - 1))
    return _DF[m]


@dataclass(frozen=True)
class TauKey:
    """Genus plus a sorted multiset of psi exponents."""

    genus: int
    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.genus < 0:
            raise ValueError("genus must be non-negative")
        idx = tuple(sorted(int(i) for i in self.indices))
        if idx and idx[0] < 0:
            raise ValueError("indices must be non-negative")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, genus: int, indices: Iterable[int]) -> "TauKey":
        return cls(genus, tuple(indices))

    @property
    def n(self) -> int:
        return len(self.indices)

    @property
    def degree(self) -> int:
        return sum(self.indices)

    def is_stable(self) -> bool:
        return 2 * self.genus - 2 + self.n > 0

    def is_top_degree(self) -> bool:
        return self.degree == 3 * self.genus - 3 + self.n

    def render(self) -> str:
        return f"{self.genus}|{','.join(map(str, self.indices))}"

    @classmethod
    def parse(cls, text: str) -> "TauKey":
        g, _, rest = text.partition("|")
        idx = tuple(int(x) for x in rest.split(",")) if rest else ()
        return cls(int(g), idx)


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class PsiEngine:
    """Memoized DVV evaluator.

    Readers never lock; writers take ``_lock``.  Two threads may compute the
    same key concurrently, which is harmless since the value is unique.
    """

    def __init__(self) -> None:
        self._memo: dict[tuple[int, tuple[int, ...]], mpq] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._memo)

    def clear(self) -> None:
        with self._lock:
            self._memo.clear()
            self.hits = self.misses = 0

    def items(self):
        return list(self._memo.items())

    def preload(self, g: int, d: tuple[int, ...], value) -> None:
        with self._lock:
            self._memo[(g, tuple(sorted(d)))] = mpq(value.numerator, value.denominator)

    # -- public ---------------------------------------------------------
    def intersection(self, key: TauKey) -> Fraction:
        return _to_fraction(self.value(key.genus, key.indices))

    def value(self, g: int, d: tuple[int, ...]) -> mpq:
        """Raw ``mpq`` value for a sorted index tuple."""
        n = len(d)
        if 2 * g - 2 + n <= 0 or sum(d) != 3 * g - 3 + n:
            return _ZERO
        return self._get(g, d)

    # -- recursion ------------------------------------------------------
    def _get(self, g: int, d: tuple[int, ...]) -> mpq:
        key = (g, d)
        v = self._memo.get(key)
        if v is not None:
            self.hits += 1
            return v
        self.misses += 1
        if sys.getrecursionlimit() < 20000:
            sys.setrecursionlimit(20000)
        v = self._compute(g, d)
        with self._lock:
            self._memo[key] = v
        return v

    def _psi(self, g: int, d) -> mpq:
        d = tuple(sorted(d))
        n = len(d)
        if 2 * g - 2 + n <= 0 or sum(d) != 3 * g - 3 + n:
            return _ZERO
        return self._get(g, d)

    def _compute(self, g: int, d: tuple[int, ...]) -> mpq:
        if g == 0 and len(d) == 3:
            return mpq(1)
        if g == 1 and d == (1,):
            # DVV at k = 0 has no terms here; instead combine the DVV line for
            # <tau_0 tau_2>_1 = 15x ... with the string equation <tau_0 tau_2>_1 = x:
            # 15x = 3x + <tau_0^3>_0 / 2, hence x = 1/24.
            return mpq(1, 24)
        if d[-1] == 0:
            # top degree with all exponents zero only happens for (0, 3)
            return _ZERO
        psi = self._psi
        k = d[-1] - 1
        S = d[:-1]
        counts: dict[int, int] = {}
        for v in S:
            counts[v] = counts.get(v, 0) + 1

        total = _ZERO
        # marked-point term: tau_v absorbs the k from the removed insertion
        for v, c in counts.items():
            rest = list(S)
            rest.remove(v)
            rest.append(v + k)
            total += c * mpq(dfact(k + v + 1), dfact(v)) * psi(g, rest)

        if k >= 1:
            acc = _ZERO
            if g >= 1:
                for r in range(k):
                    s = k - 1 - r
                    acc += dfact(r + 1) * dfact(s + 1) * psi(g - 1, S + (r, s))
            acc += self._split_sum(g, k, counts)
            total += acc / 2
        return total / dfact(k + 2)

    def _split_sum(self, g: int, k: int, counts: dict[int, int]) -> mpq:
        """Sum over separating splittings of the remaining points.

        The number of tau_0 on each side is pinned by the dimension
        constraint, so only the positive-index submultisets are enumerated.
        """
        psi = self._psi
        nz = sorted((v, c) for v, c in counts.items() if v > 0)
        c0 = counts.get(0, 0)
        subs = [((), 1, 0, 0)]
        for v, c in nz:
            subs = [
                (I + (v,) * i, w * comb(c, i), a + i, s + v * i)
                for I, w, a, s in subs
                for i in range(c + 1)
            ]
        acc = _ZERO
        for I, w, a, sI in subs:
            J_pos = []
            for v, c in nz:
                J_pos += [v] * (c - I.count(v))
            for g1 in range(g + 1):
                # left side <tau_r tau_0^{i0} tau_I>_{g1} has r = base + i0
                base = 3 * g1 - 2 + a - sI
                lo = max(0, -base)
                hi = min(c0, k - 1 - base)
                for i0 in range(lo, hi + 1):
                    if 2 * g1 - 1 + a + i0 <= 0:
                        continue
                    r = base + i0
                    left = psi(g1, (0,) * i0 + I + (r,))
                    if not left:
                        continue
                    s = k - 1 - r
                    right = psi(g - g1, [0] * (c0 - i0) + J_pos + [s])
                    if not right:
                        continue
                    acc += w * comb(c0, i0) * dfact(r + 1) * dfact(s + 1) * left * right
        return acc


DEFAULT_ENGINE = PsiEngine()


def _coerce_key(key, indices=None) -> TauKey:
    if isinstance(key, TauKey):
        return key
    if indices is None:
        raise TypeError("pass a TauKey or (genus, indices)")
    return TauKey.of(key, indices)


def psi_intersection(key, indices=None, engine: PsiEngine | None = None) -> Fraction:
    """Top intersection of psi classes; 0 when unstable or off-degree.

    Accepts either a :class:`TauKey` or ``(genus, indices)``.
    """
    k = _coerce_key(key, indices)
    return (engine or DEFAULT_ENGINE).intersection(k)


def _require_stable(k: TauKey) -> None:
    if not k.is_stable():
        raise ValueError(f"unstable key {k.render()}")


def check_string(key, indices=None, engine: PsiEngine | None = None) -> bool:
    """<tau_0 prod tau_{d_i}>_g = sum_j <... tau_{d_j - 1} ...>_g.

    ``key`` must be stable and contain a tau_0; the right side drops that
    tau_0.  Off-degree keys are accepted and both sides are then zero.  The base key (0; 0,0,0) is accepted with the convention that
    the unstable right side contributes its value 1 via <tau_0^3>_0.
    """
    k = _coerce_key(key, indices)
    _require_stable(k)
    if 0 not in k.indices:
        raise ValueError("string equation needs a tau_0 insertion")
    eng = engine or DEFAULT_ENGINE
    rest = list(k.indices)
    rest.remove(0)
    lhs = eng.intersection(k)
    if k.genus == 0 and k.n == 3:
        return lhs == 1
    rhs = Fraction(0)
    for j, dj in enumerate(rest):
        if dj == 0:
            continue
        lowered = rest[:j] + [dj - 1] + rest[j + 1 :]
        rhs += eng.intersection(TauKey.of(k.genus, lowered))
    return lhs == rhs


def check_dilaton(key, indices=None, engine: PsiEngine | None = None) -> bool:
    """<tau_1 prod tau_{d_i}>_g = (2g - 2 + n) <prod tau_{d_i}>_g with n = len(rest)."""
    k = _coerce_key(key, indices)
    _require_stable(k)
    if 1 not in k.indices:
        raise ValueError("dilaton equation needs a tau_1 insertion")
    eng = engine or DEFAULT_ENGINE
    rest = list(k.indices)
    rest.remove(1)
    lhs = eng.intersection(k)
    if k.genus == 1 and not rest:
        # <tau_1>_1 has an unstable right side; nothing to compare
        return lhs == Fraction(1, 24)
    rhs = (2 * k.genus - 2 + len(rest)) * eng.intersection(TauKey.of(k.genus, rest))
    return lhs == rhs
