"""Event queue and DRAM timing-constraint bookkeeping.

All times here are integer picoseconds.
"""
from __future__ import annotations

import heapq
import itertools
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .core import CommandKind, SimConfig, ps


class SchedulingError(ValueError):
    pass


class TimingViolation(RuntimeError):
    pass


class BusViolation(TimingViolation):
    pass


# --------------------------------------------------------------------------
# Discrete-event scheduler
# --------------------------------------------------------------------------

@dataclass(order=True)
class Event:
    time: int
    seq: int
    action: Any = field(compare=False, default=None)
    args: tuple = field(compare=False, default=())


class EventQueue:
    """Min-heap of events ordered by ``(time, seq)``.

    ``seq`` is assigned at schedule time, so events at the same time fire
    in the order they were scheduled.
    """

    def __init__(self):
        self._heap = []
        self._seq = itertools.count()
        self.now = 0

    def __len__(self):
        return len(self._heap)

    def schedule(self, time: int, action: Callable = None, *args) -> int:
        if time < self.now:
            raise SchedulingError(f"cannot schedule at {time} ps, clock is at {self.now} ps")
        seq = next(self._seq)
        heapq.heappush(self._heap, (time, seq, action, args))
        return seq

    def advance(self) -> Optional[Event]:
        """Pop the next event and move the clock to it; ``None`` at end of simulation."""
        if not self._heap:
            return None
        time, seq, action, args = heapq.heappop(self._heap)
        self.now = time
        return Event(time, seq, action, args)

    def run(self, until: Optional[int] = None) -> int:
        """Fire callbacks until the queue is empty (or past ``until``)."""
        heap = self._heap
        pop = heapq.heappop
        n = 0
        while heap:
            if until is not None and heap[0][0] > until:
                break
            time, _, action, args = pop(heap)
            self.now = time
            action(*args)
            n += 1
        return n


# --------------------------------------------------------------------------
# Timing parameters in picoseconds
# --------------------------------------------------------------------------

class Timing:
    """Integer-picosecond copy of the timing fields of a :class:`SimConfig`."""

    def __init__(self, cfg: SimConfig, burst_scale: float = 1.0):
        self.tBURST = ps(cfg.tBURST * burst_scale)
        self.tRCD = ps(cfg.tRCD)
        self.tRCD_WR = ps(cfg.tRCD_WR)
        self.tCCD_L = ps(cfg.tCCD_L)
        self.tRP = ps(cfg.tRP)
        self.tRAS = ps(cfg.tRAS)
        self.tCL = ps(cfg.tCL)
        self.tCWL = ps(cfg.tCWL)
        self.tRRD = ps(cfg.tRRD)
        self.tFAW = ps(cfg.tFAW)
        self.tRL_core = ps(cfg.tRL_core)
        self.tRC = ps(cfg.row_cycle)
        self.tHM = ps(cfg.tHM)
        self.tHM_int = ps(cfg.tHM_int)
        self.tRCD_TAG = ps(cfg.tRCD_TAG)
        self.tRRD_TAG = ps(cfg.tRRD_TAG)
        self.tRC_TAG = ps(cfg.tRC_TAG)
        self.tREFI = ps(cfg.tREFI)
        self.tRFC = ps(cfg.tRFC)
        self.tCMD = ps(cfg.tCMD)
        self.tCMD_short = ps(cfg.tCMD_short)
        self.tTURN = ps(cfg.tTURN)
        self.hm_beat = ps(cfg.hm_beat_ns)
        self.hm_status = cfg.hm_status_beats * self.hm_beat
        self.hm_tag = cfg.hm_tag_beats * self.hm_beat
        self.flush_read_latency = ps(cfg.flush_read_latency)
        # derived offsets from a combined command's issue
        self.rd_data = self.tRCD + self.tCL  # first read data beat
        self.wr_data = self.tRCD_WR + self.tCWL  # first write data beat
        self.line_xfer = 2 * self.tBURST  # two staggered 32B halves
        self.hm_delivery = self.tRCD_TAG + self.tHM
        self.hm_internal = self.tRCD_TAG + self.tHM_int


# --------------------------------------------------------------------------
# Bank and channel timing state
# --------------------------------------------------------------------------

NEVER = -(1 << 62)


class BankState:
    """Timing ledger of one logical bank (a bank pair) and its tag mats."""

    __slots__ = ("last_act", "last_rd_issue", "last_wr_issue", "last_pre", "busy_until",
                 "last_tag_act", "tag_ready", "history")

    def __init__(self):
        self.last_act = NEVER
        self.last_rd_issue = NEVER
        self.last_wr_issue = NEVER
        self.last_pre = NEVER
        self.busy_until = 0  # earliest next data activate
        self.last_tag_act = NEVER
        self.tag_ready = 0  # earliest next tag-mat activate
        self.history = None  # list of (time, kind) when auditing

    def snapshot(self) -> tuple:
        return (self.last_act, self.last_rd_issue, self.last_wr_issue, self.last_pre,
                self.busy_until, self.last_tag_act, self.tag_ready)


class ChannelTiming:
    """Activate bookkeeping shared by all banks of a channel (tRRD, tFAW, refresh)."""

    __slots__ = ("last_act", "acts", "last_tag_act", "blocked_until")

    def __init__(self):
        self.last_act = NEVER
        self.acts = deque([NEVER] * 4, maxlen=4)  # last four data activates
        self.last_tag_act = NEVER
        self.blocked_until = 0  # refresh


DATA_COMMANDS = (CommandKind.ACT_RD, CommandKind.ACT_WR)


def earliest_issue(kind: CommandKind, bank: BankState, now: int, t: Timing,
                   chan: Optional[ChannelTiming] = None, tags: bool = True) -> int:
    """Earliest time >= ``now`` at which ``kind`` may issue to ``bank``.

    Bank-side constraints only (row cycle, tRRD, tFAW, tag-mat cycle,
    refresh); bus occupancy is checked separately against a
    :class:`BusLedger`. ``tags`` says whether the command also activates
    the bank's tag mats (TDRAM combined commands and probes do).
    """
    e = now
    if kind in DATA_COMMANDS:
        if bank.busy_until > e:
            e = bank.busy_until
        if chan is not None:
            x = chan.last_act + t.tRRD
            if x > e:
                e = x
            x = chan.acts[0] + t.tFAW
            if x > e:
                e = x
    if tags and kind in (CommandKind.ACT_RD, CommandKind.ACT_WR, CommandKind.PROBE):
        if bank.tag_ready > e:
            e = bank.tag_ready
        if chan is not None:
            x = chan.last_tag_act + t.tRRD_TAG
            if x > e:
                e = x
    if chan is not None and chan.blocked_until > e:
        e = chan.blocked_until
    return e


def record_activate(kind: CommandKind, bank: BankState, when: int, t: Timing,
                    chan: Optional[ChannelTiming] = None, tags: bool = True,
                    extra: int = 0) -> None:
    """Update the ledgers after ``kind`` issued at ``when``.

    Close-page: the precharge is implied at ``when + tRAS`` and the bank may
    activate again one row cycle later. ``extra`` stretches the row cycle
    (internal read before write on a dirty write miss).
    """
    if kind in DATA_COMMANDS:
        bank.last_act = when
        bank.last_pre = when + t.tRAS + extra
        bank.busy_until = when + t.tRC + extra
        if kind is CommandKind.ACT_RD:
            bank.last_rd_issue = when
        else:
            bank.last_wr_issue = when
        if chan is not None:
            chan.last_act = when
            chan.acts.append(when)
    if tags and kind in (CommandKind.ACT_RD, CommandKind.ACT_WR, CommandKind.PROBE):
        bank.last_tag_act = when
        bank.tag_ready = when + t.tRC_TAG
        if chan is not None:
            chan.last_tag_act = when
    if bank.history is not None:
        bank.history.append((when, kind))


# --------------------------------------------------------------------------
# Bus occupancy
# --------------------------------------------------------------------------

CA, DQ, HM, COL = "CA", "DQ", "HM", "COL"
BUSES = (CA, DQ, HM, COL)

RD_DIR, WR_DIR = 0, 1


class _Track:
    __slots__ = ("starts", "ends", "dirs")

    def __init__(self):
        self.starts = []
        self.ends = []
        self.dirs = []


class BusLedger:
    """Occupied half-open intervals ``[start, end)`` per bus of one channel.

    In strict mode an overlapping reservation raises :class:`BusViolation`;
    otherwise it is recorded and counted. ``COL`` is the internal column
    path of the bank pairs; it keeps the staggered halves of different
    commands from interleaving.
    """

    def __init__(self, strict: bool = True, turnaround: int = 0):
        self.strict = strict
        self.turnaround = turnaround
        self.tracks = {b: _Track() for b in BUSES}
        self.violations = {b: 0 for b in BUSES}
        self.busy = {b: 0 for b in BUSES}
        self.log = None  # list of (bus, start, end, dir) when auditing

    def _conflict(self, tr: _Track, start: int, end: int, direction: int, gap: int) -> int:
        """End (plus turnaround) of the latest interval clashing with [start, end), or -1."""
        starts, ends, dirs = tr.starts, tr.ends, tr.dirs
        if not ends or ends[-1] + gap <= start:
            return -1
        i = bisect_left(starts, end + gap)
        worst = -1
        while i > 0:
            i -= 1
            e = ends[i]
            if e + gap <= start:
                # ends are sorted too (intervals never overlap), nothing earlier can clash
                break
            g = gap if dirs[i] != direction else 0
            if e + g > start and starts[i] < end + g:
                if e + g > worst:
                    worst = e + g
        return worst

    def is_free(self, bus: str, start: int, end: int, direction: int = RD_DIR) -> bool:
        gap = self.turnaround if bus == DQ else 0
        return self._conflict(self.tracks[bus], start, end, direction, gap) < 0

    def next_free(self, bus: str, start: int, length: int, direction: int = RD_DIR) -> int:
        """Earliest ``s >= start`` such that ``[s, s + length)`` can be reserved."""
        tr = self.tracks[bus]
        gap = self.turnaround if bus == DQ else 0
        s = start
        while True:
            c = self._conflict(tr, s, s + length, direction, gap)
            if c < 0:
                return s
            s = c

    def reserve(self, bus: str, start: int, end: int, direction: int = RD_DIR) -> bool:
        if end <= start:
            raise ValueError(f"malformed interval [{start}, {end})")
        tr = self.tracks[bus]
        # strict overlap check only; turnaround spacing is a scheduling policy
        ok = self._conflict(tr, start, end, direction, 0) < 0
        if not ok:
            self.violations[bus] += 1
            if self.strict:
                raise BusViolation(f"{bus} bus overlap reserving [{start}, {end}) ps")
        i = bisect_left(tr.starts, start)
        tr.starts.insert(i, start)
        tr.ends.insert(i, end)
        tr.dirs.insert(i, direction)
        if not ok:
            # keep ends sorted for the early-exit scan
            tr.ends.sort()
        self.busy[bus] += end - start
        if self.log is not None:
            self.log.append((bus, start, end, direction))
        return ok

    def release(self, bus: str, start: int, end: int) -> None:
        tr = self.tracks[bus]
        i = bisect_left(tr.starts, start)
        while i < len(tr.starts) and tr.starts[i] == start:
            if tr.ends[i] == end:
                del tr.starts[i], tr.ends[i], tr.dirs[i]
                self.busy[bus] -= end - start
                if self.log is not None:
                    self.log.append((bus, start, end, None))
                return
            i += 1
        raise KeyError(f"no {bus} reservation [{start}, {end})")

    def prune(self, before: int) -> None:
        """Forget intervals that ended before ``before`` (they can no longer clash)."""
        for tr in self.tracks.values():
            k = bisect_left(tr.ends, before)
            if k > 64:
                del tr.starts[:k], tr.ends[:k], tr.dirs[:k]

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())


def interval_overlaps(intervals) -> int:
    """Brute-force count of overlapping pairs among ``(start, end)`` intervals."""
    iv = sorted(intervals)
    count = 0
    for i in range(len(iv)):
        for j in range(i + 1, len(iv)):
            if iv[j][0] >= iv[i][1]:
                break
            count += 1
    return count


__all__ = [
    "BUSES", "BankState", "BusLedger", "BusViolation", "CA", "COL", "ChannelTiming", "DQ",
    "Event", "EventQueue", "HM", "NEVER", "RD_DIR", "SchedulingError", "Timing",
    "TimingViolation", "WR_DIR", "earliest_issue", "interval_overlaps", "record_activate",
]
