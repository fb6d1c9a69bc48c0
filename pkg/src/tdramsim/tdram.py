"""Device models: a plain HBM-style channel and the TDRAM cache channel.

A channel owns the bank timing ledgers, the bus ledger and the line
state of the sets that map to it. Controllers decide *when* to issue;
these classes check the timing, reserve the buses, apply the functional
effect and report what moved where.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

from .core import (LINE_BYTES, READ, WRITE, AccessOutcome, AddressMap, CommandKind,
                   DramCommand, LineState, SimConfig, classify_access)
from .timing import (CA, COL, DQ, HM, RD_DIR, WR_DIR, BankState, BusLedger, ChannelTiming,
                     Timing, TimingViolation, earliest_issue, record_activate)

O = AccessOutcome
ACT_RD, ACT_WR, PROBE = CommandKind.ACT_RD, CommandKind.ACT_WR, CommandKind.PROBE


@dataclass
class HmMessage:
    """Result of an on-die tag comparison as sent on the HM bus."""

    hit: bool
    valid: bool
    dirty: bool
    dirty_tag: Optional[int]
    request_id: int
    delivered_at: int  # ps; hit/miss status fully received
    outcome: AccessOutcome
    beats: int = 4

    def __post_init__(self):
        if (self.dirty_tag is not None) != self.outcome.evicts_dirty:
            raise ValueError("dirty tag travels exactly with a dirty miss")


@dataclass
class FlushBufferEntry:
    addr: int
    tag: int
    payload_digest: object
    inserted_at: int
    source_id: int = -1  # request whose write miss evicted the line
    drained_at: int = -1  # ps; last beat delivered to the controller
    drain_kind: str = ""


@dataclass
class ReadResult:
    outcome: AccessOutcome
    hm: Optional[HmMessage]
    data: Optional[tuple]  # (start, end) of the DQ transfer, None if nothing moved
    digest: object = None  # line contents returned on DQ
    evicted: Optional[tuple] = None  # (addr, digest) of a dirty line handed to the controller
    drained: Optional[FlushBufferEntry] = None  # flush entry sent in the unused slot
    bytes: int = 0


@dataclass
class WriteResult:
    outcome: AccessOutcome
    hm: Optional[HmMessage]
    data: tuple
    flushed: Optional[FlushBufferEntry] = None
    bytes: int = 0


class DramChannel:
    """Data banks of one channel, driven by combined activate+column commands.

    Bank pairs appear as one logical bank; ``burst_scale`` stretches the
    burst for wider transfer units (80B tag-and-data bursts use 1.25).
    """

    has_tags = False

    def __init__(self, channel: int, cfg: SimConfig, amap: AddressMap,
                 burst_scale: float = 1.0, audit: bool = False):
        self.channel = channel
        self.cfg = cfg
        self.amap = amap
        self.t = Timing(cfg, burst_scale)
        self.transfer_bytes = int(round(LINE_BYTES * burst_scale))
        self.banks = [BankState() for _ in range(cfg.banks_per_channel)]
        self.timing = ChannelTiming()
        self.ledger = BusLedger(strict=cfg.strict, turnaround=self.t.tTURN)
        self.lines = {}  # set index -> LineState
        self.timing_violations = 0
        # event counters for energy and bandwidth accounting
        self.activates = 0
        self.columns = 0
        self.dq_bytes = 0
        self.hm_beats = 0
        self.tag_accesses = 0
        self.refreshes = 0
        self.commands = [] if audit else None
        if audit:
            self.ledger.log = []
            for b in self.banks:
                b.history = []

    # -- timing helpers -------------------------------------------------
    def earliest(self, kind: CommandKind, bank: int, now: int, direction: int = RD_DIR) -> int:
        """Earliest issue time >= ``now`` satisfying bank and bus constraints.

        Read-type commands are assumed to need their DQ slot; the device
        gives it back if the tag check gates the column access.
        """
        t = self.t
        b = self.banks[bank]
        tags = self.has_tags
        led = self.ledger
        e = earliest_issue(kind, b, now, t, self.timing, tags)
        for _ in range(64):
            s = led.next_free(CA, e, t.tCMD)
            if kind is PROBE:
                if tags:
                    s = self._hm_fit(s)
            elif direction == RD_DIR:
                s = led.next_free(COL, s + t.tRCD, t.line_xfer) - t.tRCD
                s = led.next_free(DQ, s + t.rd_data, t.line_xfer, RD_DIR) - t.rd_data
                if tags:
                    s = self._hm_fit(s)
            else:
                s = led.next_free(COL, s + t.wr_data, t.line_xfer) - t.wr_data
                s = led.next_free(DQ, s + t.wr_data, t.line_xfer, WR_DIR) - t.wr_data
                if tags:
                    s = self._hm_fit(s)
            if s == e:
                return e
            e = earliest_issue(kind, b, s, t, self.timing, tags)
        raise TimingViolation("no legal issue slot found")  # pragma: no cover

    def _hm_fit(self, s: int) -> int:
        t = self.t
        # worst-case packet: status beats plus dirty-tag beats
        start = s + t.hm_delivery - t.hm_status
        return self.ledger.next_free(HM, start, t.hm_status + t.hm_tag) - t.hm_delivery + t.hm_status

    def _check(self, kind: CommandKind, bank: int, when: int) -> None:
        e = earliest_issue(kind, self.banks[bank], when, self.t, self.timing, self.has_tags)
        if e != when:
            self.timing_violations += 1
            if self.cfg.strict:
                raise TimingViolation(
                    f"{kind.value} to ch{self.channel}/bank{bank} at {when} ps; earliest legal {e} ps")

    def _log(self, when: int, kind: CommandKind, bank: int, *extra) -> None:
        if self.commands is not None:
            self.commands.append((when, kind, bank) + extra)

    def bank_pair_replicate(self, cmd: DramCommand, when: int) -> list:
        """Physical (bank group, bank, time) commands the base die derives from ``cmd``."""
        bpg = self.cfg.banks_per_group
        bg = 2 * (cmd.bank // bpg)
        b = cmd.bank % bpg
        return [(bg, b, when), (bg + 1, b, when + self.t.tBURST)]

    def _column(self, cmd: DramCommand, col_time: int) -> None:
        self.ledger.reserve(COL, col_time, col_time + self.t.line_xfer)
        self.columns += 2
        if self.commands is not None:
            for bg, b, tt in self.bank_pair_replicate(cmd, col_time):
                self.commands.append((tt, "COLUMN", cmd.bank, bg, b))

    # -- plain data accesses ------------------------------------------
    def read(self, cmd: DramCommand, when: int) -> tuple:
        """Activate+read with auto-precharge; returns ((start, end), line state)."""
        t = self.t
        self._check(ACT_RD, cmd.bank, when)
        self.ledger.reserve(CA, when, when + t.tCMD)
        record_activate(ACT_RD, self.banks[cmd.bank], when, t, self.timing, self.has_tags)
        self.activates += 1
        self._column(cmd, when + t.tRCD)
        start = when + t.rd_data
        self.ledger.reserve(DQ, start, start + t.line_xfer, RD_DIR)
        self.dq_bytes += self.transfer_bytes
        self._log(when, ACT_RD, cmd.bank)
        return (start, start + t.line_xfer), self.lines.get(cmd.set)

    def write(self, cmd: DramCommand, when: int, payload, dirty: bool = True) -> tuple:
        """Activate+write with auto-precharge; installs ``cmd.tag`` in the set."""
        t = self.t
        self._check(ACT_WR, cmd.bank, when)
        self.ledger.reserve(CA, when, when + t.tCMD)
        record_activate(ACT_WR, self.banks[cmd.bank], when, t, self.timing, self.has_tags)
        self.activates += 1
        start = when + t.wr_data
        self._column(cmd, start)
        self.ledger.reserve(DQ, start, start + t.line_xfer, WR_DIR)
        self.dq_bytes += self.transfer_bytes
        self.lines[cmd.set] = LineState(True, dirty, cmd.tag, payload)
        self._log(when, ACT_WR, cmd.bank)
        return start, start + t.line_xfer

    def refresh(self, when: int) -> int:
        """All-bank refresh starting at ``when``; returns the end of the window."""
        t = self.t
        for b in self.banks:
            if b.busy_until > when or (self.has_tags and b.tag_ready > when):
                self.timing_violations += 1
                if self.cfg.strict:
                    raise TimingViolation(f"refresh on ch{self.channel} while a bank is busy")
        self.ledger.reserve(CA, when, when + t.tCMD_short)
        end = when + t.tRFC
        self.timing.blocked_until = end
        self.refreshes += 1
        self._log(when, CommandKind.REFRESH, -1)
        return end


class TdramDevice(DramChannel):
    """A TDRAM channel: tag mats beside each bank pair, HM bus and flush buffer.

    ``tag_timing=False`` turns the tag path into an oracle with no latency
    and no bus traffic (the idealised cache).
    """

    def __init__(self, channel: int, cfg: SimConfig, amap: AddressMap,
                 audit: bool = False, tag_timing: bool = True):
        self.has_tags = tag_timing
        super().__init__(channel, cfg, amap, 1.0, audit)
        self.flush = OrderedDict()  # addr -> FlushBufferEntry, oldest first
        self.capacity = cfg.flush_capacity
        self.max_occupancy = 0
        self._occ_area = 0
        self._occ_since = 0
        self.overflow_stalls = 0

    # -- flush buffer bookkeeping ------------------------------------
    def _occ_update(self, now: int) -> None:
        self._occ_area += len(self.flush) * (now - self._occ_since)
        self._occ_since = now

    def occupancy_average(self, now: int) -> float:
        self._occ_update(now)
        return self._occ_area / now if now > 0 else 0.0

    def _insert(self, entry: FlushBufferEntry, now: int) -> None:
        if len(self.flush) >= self.capacity:
            # the internal read would stall until space exists; controllers drain first
            self.overflow_stalls += 1
            if self.cfg.strict:
                raise TimingViolation(f"flush buffer overflow on ch{self.channel}")
        self._occ_update(now)
        self.flush[entry.addr] = entry
        if len(self.flush) > self.max_occupancy:
            self.max_occupancy = len(self.flush)

    def remove(self, addr: int, now: int) -> Optional[FlushBufferEntry]:
        """Drop the entry for ``addr`` (superseded by a newer write)."""
        if addr not in self.flush:
            return None
        self._occ_update(now)
        return self.flush.pop(addr)

    def _pop_oldest(self, now: int) -> FlushBufferEntry:
        self._occ_update(now)
        _, entry = self.flush.popitem(last=False)
        return entry

    # -- HM bus ------------------------------------------------------
    def _hm(self, when: int, outcome: AccessOutcome, line: Optional[LineState],
            request_id: int) -> Optional[HmMessage]:
        if not self.has_tags:
            return None
        t = self.t
        deliver = when + t.hm_delivery
        dirty_tag = line.tag if outcome.evicts_dirty else None
        length = t.hm_status + (t.hm_tag if dirty_tag is not None else 0)
        self.ledger.reserve(HM, deliver - t.hm_status, deliver - t.hm_status + length)
        beats = self.cfg.hm_status_beats + (self.cfg.hm_tag_beats if dirty_tag is not None else 0)
        self.hm_beats += beats
        valid = line is not None and line.valid
        return HmMessage(hit=outcome.is_hit, valid=valid, dirty=valid and line.dirty,
                         dirty_tag=dirty_tag, request_id=request_id, delivered_at=deliver,
                         outcome=outcome, beats=beats)

    # -- commands ----------------------------------------------------
    def issue_act_rd(self, cmd: DramCommand, when: int) -> ReadResult:
        """Tag and data mats activate together; data moves only if it is needed."""
        t = self.t
        self._check(ACT_RD, cmd.bank, when)
        self.ledger.reserve(CA, when, when + t.tCMD)
        record_activate(ACT_RD, self.banks[cmd.bank], when, t, self.timing, self.has_tags)
        self.activates += 1
        if self.has_tags:
            self.tag_accesses += 1
        line = self.lines.get(cmd.set)
        outcome = classify_access(READ, line, cmd.tag)
        hm = self._hm(when, outcome, line, cmd.request_id)
        start = when + t.rd_data
        res = ReadResult(outcome, hm, None)
        if outcome.is_hit or outcome is O.READ_MISS_DIRTY:
            self._column(cmd, when + t.tRCD)
            self.ledger.reserve(DQ, start, start + t.line_xfer, RD_DIR)
            self.dq_bytes += LINE_BYTES
            res.data = (start, start + t.line_xfer)
            res.digest = line.payload_digest
            res.bytes = LINE_BYTES
            if outcome is O.READ_MISS_DIRTY:
                # the controller now owns the dirty copy
                res.evicted = (self.amap.line_addr(cmd.set, line.tag), line.payload_digest)
                line.dirty = False
        else:
            # column decode gated off; the read-direction slot can carry a flush entry
            res.drained = self.drain_opportunity("ReadMissCleanSlot", start)
        self._log(when, ACT_RD, cmd.bank, outcome)
        return res

    def issue_act_wr(self, cmd: DramCommand, when: int, payload) -> WriteResult:
        """Write data always moves; a dirty victim goes to the flush buffer."""
        t = self.t
        self._check(ACT_WR, cmd.bank, when)
        line = self.lines.get(cmd.set)
        outcome = classify_access(WRITE, line, cmd.tag)
        extra = t.tRL_core if outcome is O.WRITE_MISS_DIRTY else 0
        self.ledger.reserve(CA, when, when + t.tCMD)
        record_activate(ACT_WR, self.banks[cmd.bank], when, t, self.timing, self.has_tags, extra)
        self.activates += 1
        if self.has_tags:
            self.tag_accesses += 1
        hm = self._hm(when, outcome, line, cmd.request_id)
        start = when + t.wr_data
        self._column(cmd, start)
        self.ledger.reserve(DQ, start, start + t.line_xfer, WR_DIR)
        self.dq_bytes += LINE_BYTES
        flushed = None
        if outcome is O.WRITE_MISS_DIRTY:
            # internal read of the victim, tRL_core before the internal write
            self.columns += 2
            flushed = FlushBufferEntry(self.amap.line_addr(cmd.set, line.tag), line.tag,
                                       line.payload_digest, when, cmd.request_id)
            self._insert(flushed, when)
        self.lines[cmd.set] = LineState(True, not cmd.fill, cmd.tag, payload)
        self._log(when, ACT_WR, cmd.bank, outcome)
        return WriteResult(outcome, hm, (start, start + t.line_xfer), flushed, LINE_BYTES)

    def probe_tag(self, cmd: DramCommand, when: int) -> HmMessage:
        """Tag-only status query; the data banks are untouched."""
        t = self.t
        self._check(PROBE, cmd.bank, when)
        self.ledger.reserve(CA, when, when + t.tCMD)
        record_activate(PROBE, self.banks[cmd.bank], when, t, self.timing, True)
        self.tag_accesses += 1
        line = self.lines.get(cmd.set)
        outcome = classify_access(READ, line, cmd.tag)
        self._log(when, PROBE, cmd.bank, outcome)
        return self._hm(when, outcome, line, cmd.request_id)

    def drain_opportunity(self, kind: str, when: int) -> Optional[FlushBufferEntry]:
        """Send the oldest flush entry in the read-direction DQ slot at ``when``."""
        if not self.flush:
            return None
        t = self.t
        if not self.ledger.is_free(DQ, when, when + t.line_xfer, RD_DIR):
            return None
        entry = self._pop_oldest(when)
        self.ledger.reserve(DQ, when, when + t.line_xfer, RD_DIR)
        self.dq_bytes += LINE_BYTES
        entry.drained_at = when + t.line_xfer
        entry.drain_kind = kind
        return entry

    def explicit_drain(self, when: int, count: int) -> list:
        """Explicit read-from-flush-buffer command moving up to ``count`` entries as a group."""
        t = self.t
        self.ledger.reserve(CA, when, when + t.tCMD_short)
        self._log(when, CommandKind.FLUSH_DRAIN, -1, count)
        out = []
        s = when + t.flush_read_latency
        for _ in range(min(count, len(self.flush))):
            e = self.drain_opportunity("Explicit", s)
            if e is None:  # pragma: no cover - slot was checked by the controller
                break
            out.append(e)
            s += t.line_xfer
        return out

    def refresh_drains(self, start: int, end: int, limit: Optional[int] = None) -> list:
        """Use the idle DQ bus of a refresh window to return up to ``limit`` flush entries."""
        t = self.t
        out = []
        s = start + t.tCMD_short
        while self.flush and s + t.line_xfer <= end and (limit is None or len(out) < limit):
            e = self.drain_opportunity("Refresh", s)
            if e is not None:
                out.append(e)
            s += t.line_xfer
        return out
