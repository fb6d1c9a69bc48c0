import pytest

from tdramsim import AccessOutcome
from tdramsim.baselines import BaselineKind
from tdramsim.controller import ProtocolError
from tdramsim.system import System
from tdramsim.tdram import HmMessage

from helpers import R, W, addr, agrees_with_oracle, clean, desk, dirty, run_system, trace

O = AccessOutcome


# -- admission -------------------------------------------------------------------

def test_enqueue_after_controller_latency():
    s, _ = run_system("Tdram", trace((R, addr(), 5)))
    assert s.demands[0].enqueued == 15_000


def test_read_buffer_backpressure():
    reqs = trace(*[(R, addr(k % 8, k // 8), 0) for k in range(100)])
    s, res = run_system("TdramNoProbe", reqs)
    assert res.stats["max_read_queue"] == 64
    assert s.demands[63].enqueued == 10_000
    # later reads wait for slots freed as earlier ones issue
    assert s.demands[99].enqueued > 10_000
    assert agrees_with_oracle(res, reqs)


def test_writes_below_watermark_wait_for_reads():
    reqs = trace(*[(W, addr(k, 1), 0) for k in range(8)], (R, addr(0, 2), 0))
    s, _ = run_system("TdramNoProbe", reqs)
    read_left = s.demands[8].left_queue
    assert all(s.demands[i].left_queue > read_left for i in range(8))


def test_write_drain_above_high_watermark():
    reqs = trace(*[(W, addr(k % 8, k // 8 + 1), 0) for k in range(50)], (R, addr(0, 40), 0))
    s, _ = run_system("TdramNoProbe", reqs)
    writes = sorted(s.demands[i].left_queue for i in range(50))
    # the burst drains down to the low watermark before the read gets its turn
    assert s.demands[50].left_queue > writes[50 - 16 - 1]


# -- FR-FCFS ----------------------------------------------------------------------

def test_ready_younger_request_overtakes():
    reqs = trace((R, addr(0, 0), 0), (R, addr(0, 1), 0), (R, addr(1, 0), 0))
    s, _ = run_system("TdramNoProbe", reqs)
    d = s.demands
    assert d[0].left_queue < d[2].left_queue < d[1].left_queue


def test_oldest_ready_first():
    reqs = trace((R, addr(1, 0), 0), (R, addr(0, 0), 0))
    s, _ = run_system("TdramNoProbe", reqs)
    assert s.demands[0].left_queue < s.demands[1].left_queue


def test_same_set_demands_keep_arrival_order():
    a, b = addr(0, 0), addr(0, 0, tag=1)
    reqs = trace((W, a, 0), (R, b, 0), (W, b, 0), (R, a, 0))
    for design in ("Tdram", "TdramNoProbe", "CascadeLake", "Alloy", "Ideal"):
        _, res = run_system(design, reqs)
        assert res.outcomes == [O.WRITE_INVALID, O.READ_MISS_DIRTY, O.WRITE_HIT_CLEAN,
                                O.READ_MISS_DIRTY]
        assert agrees_with_oracle(res, reqs)


# -- probing ---------------------------------------------------------------------

def busy_bank_trace():
    # id 0 occupies bank 0; ids 1..3 queue behind it on distinct sets of the same bank
    return trace(*[(R, addr(0, k), 0) for k in range(4)])


def test_probe_picks_youngest():
    s, res = run_system("Tdram", busy_bank_trace())
    d = s.demands
    assert res.stats["probes"] >= 2
    assert d[3].probed and d[3].tag_time < d[2].tag_time < d[1].tag_time


def test_probe_miss_clean_leaves_queue_at_hm():
    s, res = run_system("Tdram", busy_bank_trace())
    d = s.demands[3]
    assert d.outcome is O.READ_INVALID
    # the probe waits out id 0's tag-mat cycle on the shared bank, then HM arrives 15 ns later
    assert d.left_queue == d.tag_time == 10_000 + 12_000 + 15_000
    # main-memory read issued at the HM delivery: 50 ns later plus the outbound latency
    assert d.done == d.tag_time + 50_000 + 10_000


def test_probe_hit_waits_for_main():
    reqs = busy_bank_trace()
    s, res = run_system("Tdram", reqs, [clean(r.addr) for r in reqs])
    d = s.demands[3]
    assert d.probed and d.outcome is O.READ_HIT_CLEAN
    assert d.left_queue > d.tag_time


def test_probe_miss_dirty_still_needs_main():
    reqs = busy_bank_trace()
    pre = [dirty(addr(0, 3, tag=1), 77)]
    s, res = run_system("Tdram", reqs, pre)
    d = s.demands[3]
    assert d.probed and d.outcome is O.READ_MISS_DIRTY
    assert d.left_queue > d.tag_time
    assert res.image[addr(0, 3, tag=1)] == 77


def test_no_probe_for_writes():
    reqs = trace(*[(W, addr(0, k), 0) for k in range(4)])
    _, res = run_system("Tdram", reqs)
    assert res.stats["probes"] == 0


def test_probing_does_not_change_results():
    reqs = trace(*[(R if k % 3 else W, addr(k % 3, k % 5, tag=k % 2), k) for k in range(40)])
    _, on = run_system("Tdram", reqs)
    _, off = run_system("TdramNoProbe", reqs)
    assert on.outcomes == off.outcomes and on.image == off.image
    assert on.cache_state == off.cache_state


def test_unknown_hm_message_is_protocol_error():
    s = System(desk(), BaselineKind.Tdram, [])
    msg = HmMessage(True, True, False, None, 999, 0, O.READ_HIT_CLEAN)
    with pytest.raises(ProtocolError):
        s.ctrls[0].handle_hm(msg, False)


# -- main ActRd outcomes -------------------------------------------------------------

def test_main_read_miss_dirty_writes_back():
    victim = addr(0, 0, tag=1)
    reqs = trace((R, addr(0, 0), 0))
    _, res = run_system("TdramNoProbe", reqs, [dirty(victim, 5)])
    assert res.outcomes == [O.READ_MISS_DIRTY]
    assert res.stats["backing_reads"] == 1 and res.stats["backing_writes"] == 1
    assert res.image[victim] == 5


# -- flush buffer --------------------------------------------------------------------

def test_read_forwarded_from_flush_buffer():
    x = addr(0, 0, tag=1)
    reqs = trace((W, addr(0, 0), 0), (R, x, 100))
    _, res = run_system("TdramNoProbe", reqs, [dirty(x, 42)])
    assert res.outcomes == [O.WRITE_MISS_DIRTY, O.READ_MISS_DIRTY]
    assert res.records[1].forwarded
    assert res.stats["backing_reads"] == 0
    assert res.image[x] == 42
    assert agrees_with_oracle(res, reqs, [dirty(x, 42)])


def test_write_supersedes_buffered_victim():
    x, y = addr(0, 0, tag=1), addr(0, 0, tag=2)
    reqs = trace((W, y, 0), (W, x, 100))
    _, res = run_system("TdramNoProbe", reqs, [dirty(x, 42)])
    assert res.stats["superseded"] == 1
    assert res.audit["dirty_preserved"]
    assert agrees_with_oracle(res, reqs, [dirty(x, 42)])


def test_forced_drain_when_buffer_full():
    pre = [dirty(addr(k, 0, tag=1)) for k in range(5)]
    reqs = trace(*[(W, addr(k, 0), 0) for k in range(5)])
    _, res = run_system("TdramNoProbe", reqs, pre, flush_capacity=4)
    assert res.stats["forced_drains"] == 1
    assert res.stats["forced_drain_entries"] >= 4
    assert res.audit["dirty_preserved"]


def test_no_forced_drain_below_capacity():
    pre = [dirty(addr(k, 0, tag=1)) for k in range(4)]
    reqs = trace(*[(W, addr(k, 0), 0) for k in range(4)])
    _, res = run_system("TdramNoProbe", reqs, pre, flush_capacity=4)
    assert res.stats["forced_drains"] == 0
    assert res.stats["drains_Final"] == 4


def test_read_miss_clean_slot_drains():
    pre = [dirty(addr(0, 0, tag=1)), clean(addr(1, 0, tag=1))]
    reqs = trace((W, addr(0, 0), 0), (R, addr(1, 0), 100))
    _, res = run_system("TdramNoProbe", reqs, pre)
    assert res.stats["drains_ReadMissCleanSlot"] == 1
    assert res.records[0].bytes_moved == 128  # the drain is charged to the write miss


def test_refresh_window_drains():
    pre = [dirty(addr(0, 0, tag=1))]
    reqs = trace((W, addr(0, 0), 0), (R, addr(0, 0, ch=1), 8000))
    _, res = run_system("TdramNoProbe", reqs, pre)
    assert res.stats["drains_Refresh"] == 1 and res.stats["refreshes"] >= 1
    assert res.audit["dirty_preserved"]
