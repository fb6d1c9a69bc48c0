import pytest

from tdramsim import ALL_KINDS, AccessOutcome, BaselineKind, SimConfig, tag_ready_ns, transaction_plan
from tdramsim.workload import BYTE_RULES

from helpers import R, W, addr, clean, dirty, run_system, trace

O = AccessOutcome


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("outcome", list(O))
def test_plan_bytes_match_reference_rules(kind, outcome):
    plan = transaction_plan(kind, outcome)
    moved = sum(s.moved for s in plan)
    useful = sum(s.useful for s in plan)
    assert (moved, useful) == BYTE_RULES[kind.value][outcome.value]
    assert all(s.useful <= s.moved for s in plan)


def test_tag_ready_unloaded():
    cfg = SimConfig()
    assert tag_ready_ns(BaselineKind.Tdram, cfg) == 15.0
    assert tag_ready_ns(BaselineKind.TdramNoProbe, cfg) == 15.0
    assert tag_ready_ns(BaselineKind.CascadeLake, cfg) == 32.0
    assert tag_ready_ns(BaselineKind.Alloy, cfg) == 32.5
    assert tag_ready_ns(BaselineKind.Ideal, cfg) == 0.0


def test_parse_names():
    assert BaselineKind.parse("cascade-lake") is BaselineKind.CascadeLake
    assert BaselineKind.parse("TDRAM_NO_PROBE") is BaselineKind.TdramNoProbe
    with pytest.raises(ValueError, match="unknown device kind"):
        BaselineKind.parse("sram")


@pytest.mark.parametrize("design,want", [("Tdram", 15.0), ("TdramNoProbe", 15.0),
                                         ("CascadeLake", 32.0), ("Alloy", 32.5), ("Ideal", 0.0)])
def test_isolated_read_tag_latency(design, want):
    _, res = run_system(design, trace((R, addr(), 0)))
    assert res.records[0].tag_check_latency == want


def test_cascade_write_hit_reads_first():
    a = addr()
    _, res = run_system("CascadeLake", trace((W, a, 0)), [clean(a)])
    r = res.records[0]
    assert (r.bytes_moved, r.bytes_useful) == (128, 64)
    assert res.counts.activates == 2


def test_cascade_read_miss_clean_wastes_a_line():
    a = addr()
    _, res = run_system("CascadeLake", trace((R, a, 0)), [clean(addr(tag=1))])
    r = res.records[0]
    assert r.outcome is O.READ_MISS_CLEAN
    assert (r.bytes_moved, r.bytes_useful) == (128, 64)  # discarded read plus the fill


def test_cascade_writes_occupy_read_buffer():
    reqs = trace(*[(W, addr(k % 8, k // 8), 0) for k in range(16)])
    _, cas = run_system("CascadeLake", reqs)
    _, td = run_system("Tdram", reqs)
    assert cas.stats["max_read_queue"] > 0
    assert td.stats["max_read_queue"] == 0


def test_alloy_read_hit_bloat():
    a = addr()
    _, res = run_system("Alloy", trace((R, a, 0)), [clean(a)])
    r = res.records[0]
    assert (r.bytes_moved, r.bytes_useful) == (80, 64)
    assert res.counts.dq_bytes == 80


def test_ideal_read_miss_fetches_at_enqueue():
    _, res = run_system("Ideal", trace((R, addr(), 0)))
    r = res.records[0]
    assert r.outcome is O.READ_INVALID
    # 10 ns in, 50 ns main memory, 10 ns out; no DRAM-cache access on the way
    assert r.end_to_end == 70.0 and r.queueing_delay == 0.0


def test_ideal_write_hit_is_one_write():
    a = addr()
    _, res = run_system("Ideal", trace((W, a, 0)), [dirty(a)])
    assert res.counts.activates == 1 and res.counts.dq_bytes == 64
    assert res.counts.hm_beats == 0 and res.counts.tag_accesses == 0


def test_tdram_read_miss_clean_no_dq():
    _, res = run_system("TdramNoProbe", trace((R, addr(), 0)), [clean(addr(tag=1))])
    # only the fill crosses DQ
    assert res.counts.dq_bytes == 64
    assert res.records[0].bytes_moved == 64
