"""Persistent cache of psi numbers and normalized brackets.

File layout::

    # wpvl-cache 1
    # fingerprint grading=2pi2;kappa_reduction=setpartition-v1;orbifold=True
    psi 1|1 -> 1/24*pi^0
    bracket 0|0,0,0,0 -> 2/1*pi^2

Records are written sorted, so saving the same contents twice gives the same
bytes.  Access is serialized through an advisory lock on ``<path>.lock``.
"""

from __future__ import annotations

import contextlib
import fcntl
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction

from .exactnum import PiMonomial
from .psi import DEFAULT_ENGINE, PsiEngine, TauKey
from .volumes import DEFAULT_TABLE, BracketTable, convention_fingerprint

FORMAT_VERSION = "1"
MAGIC = "# wpvl-cache"


class CacheMismatch(Exception):
    """Raised when a cache file was written under different conventions."""


@dataclass
class CacheContents:
    fingerprint: str
    psi: dict[TauKey, PiMonomial]
    brackets: dict[TauKey, PiMonomial]

    def __len__(self) -> int:
        return len(self.psi) + len(self.brackets)


@contextlib.contextmanager
def _locked(path: str, exclusive: bool):
    lock_path = path + ".lock"
    fd = os.open(lock_path, os.O_RDWR | os.O_CREAT, 0o644)
    try:
        fcntl.flock(fd, fcntl.LOCK_EX if exclusive else fcntl.LOCK_SH)
        yield
    finally:
        fcntl.flock(fd, fcntl.LOCK_UN)
        os.close(fd)


def render_cache(contents: CacheContents) -> str:
    lines = [f"{MAGIC} {FORMAT_VERSION}", f"# fingerprint {contents.fingerprint}"]
    order = lambda kv: (kv[0].genus, len(kv[0].indices), kv[0].indices)
    for key, v in sorted(contents.psi.items(), key=order):
        lines.append(f"psi {key.render()} -> {v.render()}")
    for key, v in sorted(contents.brackets.items(), key=order):
        lines.append(f"bracket {key.render()} -> {v.render()}")
    return "\n".join(lines) + "\n"


def parse_cache(text: str) -> CacheContents:
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith(MAGIC):
        raise CacheMismatch("not a wpvl cache file")
    version = lines[0][len(MAGIC):].strip()
    if version != FORMAT_VERSION:
        raise CacheMismatch(f"cache format {version!r}, expected {FORMAT_VERSION!r}")
    if not lines[1].startswith("# fingerprint "):
        raise CacheMismatch("missing fingerprint header")
    fp = lines[1][len("# fingerprint "):].strip()
    psi: dict[TauKey, PiMonomial] = {}
    brackets: dict[TauKey, PiMonomial] = {}
    for ln, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        try:
            kind, rest = line.split(" ", 1)
            key_s, val_s = rest.split(" -> ")
            key, val = TauKey.parse(key_s), PiMonomial.parse(val_s)
        except ValueError as exc:
            raise CacheMismatch(f"line {ln}: {exc}") from exc
        if kind == "psi":
            psi[key] = val
        elif kind == "bracket":
            brackets[key] = val
        else:
            raise CacheMismatch(f"line {ln}: unknown record kind {kind!r}")
    return CacheContents(fp, psi, brackets)


def snapshot(engine: PsiEngine | None = None, table: BracketTable | None = None) -> CacheContents:
    eng = engine or DEFAULT_ENGINE
    tab = table or DEFAULT_TABLE
    psi = {TauKey(g, d): PiMonomial(Fraction(int(v.numerator), int(v.denominator)), 0)
           for (g, d), v in eng.items()}
    br = {TauKey(g, d): v for (g, d), v in tab.brackets()}
    return CacheContents(convention_fingerprint(), psi, br)


def save_cache(path: str, engine: PsiEngine | None = None, table: BracketTable | None = None) -> int:
    """Write the in-memory tables to ``path`` atomically; returns record count."""
    contents = snapshot(engine, table)
    text = render_cache(contents)
    with _locked(path, exclusive=True):
        d = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".wpvl-cache-")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    return len(contents)


def read_cache(path: str) -> CacheContents:
    with _locked(path, exclusive=False):
        with open(path) as fh:
            text = fh.read()
    contents = parse_cache(text)
    if contents.fingerprint != convention_fingerprint():
        raise CacheMismatch(
            f"fingerprint {contents.fingerprint!r} does not match {convention_fingerprint()!r}")
    return contents


def load_cache(path: str, engine: PsiEngine | None = None, table: BracketTable | None = None) -> int:
    """Validate the whole file, then merge it; nothing is merged on mismatch."""
    contents = read_cache(path)
    eng = engine or DEFAULT_ENGINE
    tab = table or DEFAULT_TABLE
    for key, v in contents.psi.items():
        eng.preload(key.genus, key.indices, v.coeff)
    for key, v in contents.brackets.items():
        tab.preload(key.genus, key.indices, v)
    return len(contents)
