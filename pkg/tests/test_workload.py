import gzip
import io

import pytest

from tdramsim import (AccessOutcome, MemRequest, ReqKind, SimConfig, SyntheticParams, breakdown,
                      functional_oracle, gen_synthetic, parse_trace, preset, read_trace, write_trace)
from tdramsim.core import initial_digest, write_digest
from tdramsim.workload import TraceParseError, format_trace

from helpers import R, W, addr, clean, dirty, trace

O = AccessOutcome


# -- trace format -------------------------------------------------------------------

def test_parse_examples():
    reqs = parse_trace(io.StringIO("R 0x1000\nW 0x1040 5\n"))
    assert reqs == [MemRequest(ReqKind.READ, 0x1000, 0.0, 0),
                    MemRequest(ReqKind.WRITE, 0x1040, 5.0, 1)]


def test_parse_comments_blank_lines_and_alignment():
    text = "# header\n\nr 0x1005   # unaligned read\nW 0x2000 1.5\nR 0x3000 2\n"
    reqs = parse_trace(text.splitlines())
    assert [r.addr for r in reqs] == [0x1000, 0x2000, 0x3000]
    assert [r.arrival for r in reqs] == [0.0, 1.5, 3.5]
    assert [r.id for r in reqs] == [0, 1, 2]


@pytest.mark.parametrize("text,lineno", [
    ("X 0x10\n", 1),
    ("R 0x10\nR zz\n", 2),
    ("R 0x10\n\nW 0x40 -1\n", 3),
    ("R\n", 1),
    ("R 0x40 1 2\n", 1),
    ("W 0x40 nan\n", 1),
])
def test_parse_errors_carry_line_number(text, lineno):
    with pytest.raises(TraceParseError) as exc:
        parse_trace(io.StringIO(text))
    assert exc.value.lineno == lineno
    assert f"line {lineno}" in str(exc.value)


def test_parse_rejects_address_outside_space():
    with pytest.raises(TraceParseError, match="outside"):
        parse_trace(["R 0x1000"], address_space=0x1000)


def test_trace_roundtrip_plain_and_gzip(tmp_path):
    reqs = gen_synthetic(SyntheticParams(n=200, seed=4))
    for name in ("t.trace", "t.trace.gz"):
        p = write_trace(reqs, tmp_path / name)
        back = read_trace(p)
        assert [(r.kind, r.addr) for r in back] == [(r.kind, r.addr) for r in reqs]
        assert [r.arrival for r in back] == pytest.approx([r.arrival for r in reqs], abs=1e-3)


def test_gzip_detected_by_content(tmp_path):
    p = tmp_path / "no_suffix"
    p.write_bytes(gzip.compress(b"R 0x40\nW 0x80 3\n"))
    assert [r.addr for r in read_trace(p)] == [0x40, 0x80]


# -- synthetic traces ------------------------------------------------------------------

def test_same_seed_byte_identical():
    p = preset("high-miss", SimConfig.desk(), n=3000, seed=9)
    assert format_trace(gen_synthetic(p)) == format_trace(gen_synthetic(p))


def test_different_seed_differs():
    cfg = SimConfig.desk()
    a = gen_synthetic(preset("low-miss", cfg, n=500, seed=1))
    b = gen_synthetic(preset("low-miss", cfg, n=500, seed=2))
    assert format_trace(a) != format_trace(b)


def test_synthetic_shape():
    p = SyntheticParams(n=20_000, read_fraction=0.7, mean_gap_ns=3.0, seed=1)
    reqs = gen_synthetic(p)
    reads = sum(r.kind == ReqKind.READ for r in reqs) / len(reqs)
    assert reads == pytest.approx(0.7, abs=0.02)
    assert reqs[-1].arrival / len(reqs) == pytest.approx(3.0, rel=0.05)
    assert all(r.addr % 64 == 0 and r.addr < p.footprint for r in reqs)
    assert all(a.arrival <= b.arrival for a, b in zip(reqs, reqs[1:]))


def test_small_footprint_mostly_hits():
    cfg = SimConfig.desk()
    ref = functional_oracle(gen_synthetic(preset("low-miss", cfg, n=20_000, seed=1)), cfg)
    assert breakdown(ref.outcomes).miss_ratio < 0.30


def test_large_footprint_mostly_misses():
    cfg = SimConfig.desk()
    ref = functional_oracle(gen_synthetic(preset("high-miss", cfg, n=20_000, seed=1)), cfg)
    assert breakdown(ref.outcomes).miss_ratio > 0.50


def test_write_reuse_controls_dirty_write_misses():
    # the scan needs more requests than the cache has lines before it revisits a set
    cfg = SimConfig.desk()
    share = {}
    for reuse in (0.2, 0.95):
        reqs = gen_synthetic(preset("high-miss", cfg, n=100_000, seed=1, write_reuse=reuse))
        b = breakdown(functional_oracle(reqs, cfg).outcomes)
        share[reuse] = b.fractions()[O.WRITE_MISS_DIRTY]
    assert share[0.95] < share[0.2]
    assert share[0.95] <= 0.01


@pytest.mark.parametrize("kw", [dict(hot_fraction=1.5), dict(read_fraction=-0.1),
                                dict(footprint=0), dict(reuse_window=0), dict(n=-1)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        SyntheticParams(**kw)


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown preset"):
        preset("medium", SimConfig.desk())


# -- functional oracle ------------------------------------------------------------------

def test_oracle_empty_trace():
    ref = functional_oracle([], SimConfig.desk())
    assert ref.outcomes == [] and ref.image == {}
    assert all(ref.bloat(d) == 1.0 for d in ref.bytes)


def test_oracle_all_read_hit_bloat():
    a = [addr(k) for k in range(8)]
    ref = functional_oracle(trace(*[(R, x, 0) for x in a]), SimConfig.desk(), [clean(x) for x in a])
    assert ref.bloat("Tdram") == 1.0 and ref.bloat("CascadeLake") == 1.0
    assert ref.bloat("Alloy") == 1.25


def test_oracle_all_write_hit_bloat():
    a = [addr(k) for k in range(8)]
    ref = functional_oracle(trace(*[(W, x, 0) for x in a]), SimConfig.desk(), [clean(x) for x in a])
    assert ref.bloat("CascadeLake") == 2.0 and ref.bloat("Tdram") == 1.0


def test_oracle_cold_start_all_invalid():
    reqs = trace(*[(R if k % 2 else W, addr(k), 0) for k in range(16)])
    b = breakdown(functional_oracle(reqs, SimConfig.desk()).outcomes)
    assert b.counts[O.READ_INVALID] + b.counts[O.WRITE_INVALID] == 16


def test_oracle_memory_image():
    x, y = addr(0, 0, tag=1), addr(0, 0, tag=2)
    reqs = trace((W, y, 0), (R, x, 1))
    ref = functional_oracle(reqs, SimConfig.desk(), [dirty(x, 7)])
    assert ref.outcomes == [O.WRITE_MISS_DIRTY, O.READ_MISS_DIRTY]
    # x was written back, then y was written back when x came back in
    assert ref.image == {x: 7, y: write_digest(y, 0)}
    assert initial_digest(x) != 7
