"""Trace files, synthetic traces and the timing-free reference cache."""
from __future__ import annotations

import gzip
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .core import (LINE_BYTES, LINE_SHIFT, READ, WRITE, AccessOutcome, MemRequest, MiB,
                   SimConfig, initial_digest, write_digest)

O = AccessOutcome


class TraceParseError(ValueError):
    def __init__(self, lineno: int, line: str, why: str):
        super().__init__(f"line {lineno}: {why}: {line.strip()!r}")
        self.lineno = lineno


# -- trace text format ----------------------------------------------------
#   R 0x1000          read, same arrival time as the previous record
#   W 0x1040 5        write, 5 ns after the previous record
#   # comment / blank lines are ignored

def parse_trace(stream: Union[TextIO, Iterable[str]], address_space: Optional[int] = None) -> list:
    reqs = []
    t = 0.0
    for lineno, raw in enumerate(stream, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise TraceParseError(lineno, raw, "expected 'R|W addr [gap_ns]'")
        op = parts[0].upper()
        if op not in ("R", "W"):
            raise TraceParseError(lineno, raw, f"unknown access kind {parts[0]!r}")
        try:
            addr = int(parts[1], 16)
        except ValueError:
            raise TraceParseError(lineno, raw, "address is not hexadecimal") from None
        if addr < 0 or (address_space is not None and addr >= address_space):
            raise TraceParseError(lineno, raw, "address outside the physical address space")
        if len(parts) == 3:
            try:
                gap = float(parts[2])
            except ValueError:
                raise TraceParseError(lineno, raw, "gap is not a number") from None
            if gap < 0 or gap != gap:
                raise TraceParseError(lineno, raw, "gap must be a nonnegative number")
            t += gap
        kind = READ if op == "R" else WRITE
        reqs.append(MemRequest(kind, addr & ~(LINE_BYTES - 1), t, len(reqs)))
    return reqs


def read_trace(path, address_space: Optional[int] = None) -> list:
    """Parse a trace file; ``.gz`` files (or gzip magic) are decompressed transparently."""
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(2)
    opener = gzip.open if magic == b"\x1f\x8b" else open
    with opener(path, "rt") as fh:
        return parse_trace(fh, address_space)


def format_trace(reqs: Sequence[MemRequest]) -> str:
    out = io.StringIO()
    prev = 0.0
    for r in reqs:
        gap = r.arrival - prev
        prev = r.arrival
        k = "R" if r.kind == READ else "W"
        out.write(f"{k} {r.addr:#x} {gap:.6g}\n" if gap else f"{k} {r.addr:#x}\n")
    return out.getvalue()


def write_trace(reqs: Sequence[MemRequest], path) -> Path:
    path = Path(path)
    text = format_trace(reqs)
    if path.suffix == ".gz":
        with gzip.open(path, "wt") as fh:
            fh.write(text)
    else:
        path.write_text(text)
    return path


# -- synthetic traces -------------------------------------------------------

@dataclass(frozen=True)
class SyntheticParams:
    """Hot set plus a streaming scan over a contiguous footprint.

    ``hot_fraction`` of accesses go to the first ``hot_bytes`` of the
    footprint; the rest walk the whole footprint sequentially, so the
    stream's reuse distance is the footprint itself. ``write_reuse`` is the
    share of writes that rewrite a recently read line (a writeback of a
    line the core just used); the others go where a read would have gone.
    """

    n: int = 100_000
    footprint: int = 1 * MiB
    hot_bytes: int = 256 * 1024
    hot_fraction: float = 0.8
    read_fraction: float = 0.7
    write_reuse: float = 0.9
    reuse_window: int = 64
    mean_gap_ns: float = 3.5
    base: int = 0
    seed: int = 0

    def __post_init__(self):
        for name in ("hot_fraction", "read_fraction", "write_reuse"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.footprint < LINE_BYTES or self.hot_bytes < 0:
            raise ValueError("footprint must hold at least one line")
        if self.n < 0 or self.mean_gap_ns < 0 or self.reuse_window < 1:
            raise ValueError("n, mean_gap_ns must be nonnegative and reuse_window positive")


def gen_synthetic(p: SyntheticParams) -> list:
    rng = np.random.default_rng(p.seed)
    n = p.n
    lines = p.footprint // LINE_BYTES
    hot = max(1, min(lines, p.hot_bytes // LINE_BYTES))
    is_read = rng.random(n) < p.read_fraction
    to_hot = rng.random(n) < p.hot_fraction
    hot_pick = rng.integers(0, hot, n)
    reuse = rng.random(n) < p.write_reuse
    back = rng.integers(0, p.reuse_window, n)
    gaps = rng.exponential(p.mean_gap_ns, n) if p.mean_gap_ns > 0 else np.zeros(n)
    arrivals = np.round(np.cumsum(gaps), 3)
    recent = np.zeros(p.reuse_window, dtype=np.int64)
    n_recent = 0
    cursor = 0
    reqs = []
    for i in range(n):
        if not is_read[i] and reuse[i] and n_recent:
            m = min(n_recent, p.reuse_window)
            line = int(recent[(n_recent - 1 - back[i] % m) % p.reuse_window])
        elif to_hot[i]:
            line = int(hot_pick[i])
        else:
            line = cursor
            cursor = (cursor + 1) % lines
        if is_read[i]:
            recent[n_recent % p.reuse_window] = line
            n_recent += 1
        kind = READ if is_read[i] else WRITE
        reqs.append(MemRequest(kind, p.base + (line << LINE_SHIFT), float(arrivals[i]), i))
    return reqs


def preset(name: str, cfg: SimConfig, n: int = 100_000, seed: int = 0, **overrides) -> SyntheticParams:
    """``low-miss`` (footprint half the cache) or ``high-miss`` (ten times the cache)."""
    cap = cfg.cache_capacity
    if name == "low-miss":
        kw = dict(footprint=cap // 2, hot_bytes=cap // 8, hot_fraction=0.8)
    elif name == "high-miss":
        kw = dict(footprint=cap * 10, hot_bytes=cap // 8, hot_fraction=0.3)
    else:
        raise ValueError(f"unknown preset {name!r}; choose low-miss or high-miss")
    kw.update(n=n, seed=seed)
    kw.update(overrides)
    return SyntheticParams(**kw)


PRESETS = ("low-miss", "high-miss")


# -- reference model ------------------------------------------------------------

# (bytes moved, bytes useful) per outcome; the timed models derive theirs from
# their command sequences, this table is written down independently.
_TDRAM_BYTES = {
    "ReadHitClean": (64, 64), "ReadHitDirty": (64, 64),
    "ReadInvalid": (64, 64), "ReadMissClean": (64, 64), "ReadMissDirty": (128, 128),
    "WriteInvalid": (64, 64), "WriteMissClean": (64, 64), "WriteHitClean": (64, 64),
    "WriteHitDirty": (64, 64), "WriteMissDirty": (128, 128),
}


def _tags_in_dram_bytes(unit: int) -> dict:
    d = {}
    for o in O:
        if o.is_read and o.is_hit:
            d[o.value] = (unit, 64)
        elif o.evicts_dirty:
            d[o.value] = (2 * unit, 128)
        else:
            d[o.value] = (2 * unit, 64)
    return d


BYTE_RULES = {
    "Tdram": _TDRAM_BYTES,
    "TdramNoProbe": _TDRAM_BYTES,
    "Ideal": _TDRAM_BYTES,
    "CascadeLake": _tags_in_dram_bytes(64),
    "Alloy": _tags_in_dram_bytes(80),
}


@dataclass
class OracleResult:
    image: dict  # addr -> digest for every line ever written back or dirty in the cache
    outcomes: list
    bytes: dict = field(default_factory=dict)  # design name -> (moved, useful)

    def bloat(self, design: str) -> float:
        moved, useful = self.bytes[design]
        if useful == 0:
            return 1.0 if moved == 0 else float("inf")
        return moved / useful


def functional_oracle(reqs: Sequence[MemRequest], cfg: SimConfig, preload: Iterable = ()) -> OracleResult:
    """Direct-mapped, insert-on-miss, write-back cache with no timing at all.

    Set index is the line number modulo the number of cache lines, tag the
    quotient; this is what a channel-lowest address interleave reduces to.
    """
    n_lines = cfg.cache_lines
    cache = {}  # set -> [tag, dirty, digest]
    mem = {}
    for addr, dirty, digest in preload:
        ln = addr >> LINE_SHIFT
        cache[ln % n_lines] = [ln // n_lines, dirty, digest]
    outcomes = []
    for r in reqs:
        ln = r.addr >> LINE_SHIFT
        s, tag = ln % n_lines, ln // n_lines
        cur = cache.get(s)
        hit = cur is not None and cur[0] == tag
        if r.kind == READ:
            if hit:
                o = O.READ_HIT_DIRTY if cur[1] else O.READ_HIT_CLEAN
            else:
                if cur is None:
                    o = O.READ_INVALID
                elif cur[1]:
                    o = O.READ_MISS_DIRTY
                    mem[(cur[0] * n_lines + s) << LINE_SHIFT] = cur[2]
                else:
                    o = O.READ_MISS_CLEAN
                a = ln << LINE_SHIFT
                cache[s] = [tag, False, mem.get(a, initial_digest(a))]
        else:
            payload = r.payload_digest if r.payload_digest is not None else write_digest(r.addr, r.id)
            if hit:
                o = O.WRITE_HIT_DIRTY if cur[1] else O.WRITE_HIT_CLEAN
            elif cur is None:
                o = O.WRITE_INVALID
            elif cur[1]:
                o = O.WRITE_MISS_DIRTY
                mem[(cur[0] * n_lines + s) << LINE_SHIFT] = cur[2]
            else:
                o = O.WRITE_MISS_CLEAN
            cache[s] = [tag, True, payload]
        outcomes.append(o)
    image = dict(mem)
    for s, (tag, dirty, digest) in cache.items():
        if dirty:
            image[(tag * n_lines + s) << LINE_SHIFT] = digest
    totals = {}
    for design, rule in BYTE_RULES.items():
        moved = useful = 0
        for o in outcomes:
            m, u = rule[o.value]
            moved += m
            useful += u
        totals[design] = (moved, useful)
    return OracleResult(image, outcomes, totals)
