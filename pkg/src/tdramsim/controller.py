"""DRAM-cache controller: demand queues, FR-FCFS, early tag probing, HM handling.

One :class:`ChannelController` serves one cache channel. The design
specific behaviour (what a read or write turns into) lives in subclasses;
this module holds the shared machinery and the TDRAM controller. The
baseline controllers are in :mod:`tdramsim.baselines`.
"""
from __future__ import annotations

from bisect import insort
from collections import deque
from typing import Optional

from .core import (LINE_BYTES, READ, AccessOutcome, CommandKind, DramCommand, ns)
from .tdram import DramChannel, FlushBufferEntry, HmMessage, TdramDevice
from .timing import CA, DQ, RD_DIR, WR_DIR, earliest_issue

O = AccessOutcome
INF = 1 << 62
ACT_RD, ACT_WR, PROBE = CommandKind.ACT_RD, CommandKind.ACT_WR, CommandKind.PROBE

# queue entry kinds
OP_RD = 0  # tag check with data: TDRAM ActRd, or the tag read of a tags-in-DRAM design
OP_WR = 1  # TDRAM ActWr for a demand write
OP_FILL = 2  # install a line fetched from main memory
OP_WDATA = 3  # data write issued after a controller-side tag check


class ProtocolError(RuntimeError):
    pass


class Demand:
    """Runtime state of one LLC demand inside the controller."""

    __slots__ = ("id", "kind", "addr", "set", "tag", "bank", "ch", "payload", "arrival",
                 "enqueued", "tag_time", "left_queue", "done", "outcome", "probed",
                 "fetching", "data_ready", "main_needed", "fill_digest", "resp_digest",
                 "forwarded", "moved", "useful", "probe_conflict", "probe_delayed", "released", "retired",
                 "cmd")

    def __init__(self, req, dec, payload, arrival_ps):
        self.id = req.id
        self.kind = req.kind
        self.addr = req.addr
        self.set = dec.set
        self.tag = dec.tag
        self.bank = dec.bank
        self.ch = dec.channel
        self.payload = payload
        self.arrival = arrival_ps
        self.enqueued = -1
        self.tag_time = -1
        self.left_queue = -1
        self.done = -1
        self.outcome = None
        self.probed = False
        self.fetching = False
        self.data_ready = False
        self.main_needed = False
        self.fill_digest = None
        self.resp_digest = None
        self.forwarded = False
        self.moved = 0
        self.useful = 0
        self.probe_conflict = False
        self.probe_delayed = False
        self.released = False
        self.retired = False
        self.cmd = DramCommand(ACT_RD, dec.channel, dec.bank, dec.row, dec.column, dec.tag,
                               dec.set, req.id)


class Op:
    __slots__ = ("kind", "dem", "id", "bank", "set", "blocked")

    def __init__(self, kind, dem):
        self.kind = kind
        self.dem = dem
        self.id = dem.id
        self.bank = dem.bank
        self.set = dem.set
        self.blocked = False


def _op_id(op):
    return op.id


class ChannelController:
    """Shared queueing, scheduling and bookkeeping for one cache channel."""

    probing = False
    holds_write_in_read_queue = False  # tags-in-DRAM designs read before every write
    wb_need = 2  # writeback slots one read may fill: dirty victim plus a flush drain

    def __init__(self, channel: int, system):
        self.ch = channel
        self.sys = system
        self.cfg = cfg = system.cfg
        self.ev = system.events
        self.dev = self.make_device(audit=system.audit)
        self.t = self.dev.t
        nb = cfg.banks_per_channel
        self.rq = [[] for _ in range(nb)]
        self.wq = [[] for _ in range(nb)]
        self.n_read = 0  # read-buffer occupancy
        self.n_write = 0  # write-buffer occupancy (demand writes)
        self.n_wops = 0  # write-class operations queued, fills included
        self.write_mode = False
        self.sets = {}  # set -> deque of demand ids in arrival order
        self.live = {}  # id -> Demand not yet retired
        self.wb = deque()  # writeback buffer toward main memory: (addr, digest, source)
        self.wb_index = {}  # addr -> [count, newest digest]
        self.wb_reserved = 0
        self.wb_max = 0
        self.shadow = {}  # mirror of the device flush buffer: addr -> digest
        self.transit = {}  # flush entries on their way to the controller
        self.wake_at = INF
        self._passes = 0
        self.refresh_pending = False
        self.next_refresh = self.t.tREFI + (channel * self.t.tREFI) // max(1, cfg.channels)
        self.nonprobe_tag_ready = [0] * nb
        self.nonprobe_last_tag_act = -INF
        self.probe_tag_until = -1
        # statistics
        self.max_read_q = 0
        self.max_write_q = 0
        self.read_q_area = 0
        self._rq_since = 0
        self.probes = 0
        self.probe_delays = 0
        self.forced_drains = 0
        self.forced_drain_entries = 0
        self.drains = {"ReadMissCleanSlot": 0, "Refresh": 0, "Explicit": 0, "Final": 0}
        self.superseded = 0
        self.ev.schedule(self.next_refresh, self._refresh_due)

    def make_device(self, audit: bool = False) -> DramChannel:
        raise NotImplementedError

    # ------------------------------------------------------------------
    # admission
    # ------------------------------------------------------------------
    def can_accept(self, kind) -> bool:
        if kind == READ:
            return self.n_read < self.cfg.read_buffer
        if self.n_write >= self.cfg.write_buffer:
            return False
        return not self.holds_write_in_read_queue or self.n_read < self.cfg.read_buffer

    def enqueue_demand(self, dem: Demand, now: int) -> bool:
        """Accept ``dem`` into the read or write buffer; False means backpressure."""
        if not self.can_accept(dem.kind):
            return False
        dem.enqueued = now
        self.live[dem.id] = dem
        fifo = self.sets.get(dem.set)
        if fifo is None:
            fifo = self.sets[dem.set] = deque()
        fifo.append(dem.id)
        if dem.kind == READ or self.holds_write_in_read_queue:
            self._rq_account(now)
            self.rq[dem.bank].append(Op(OP_RD, dem))
            self.n_read += 1
            if self.n_read > self.max_read_q:
                self.max_read_q = self.n_read
        if dem.kind != READ:
            self.n_write += 1
            if self.n_write > self.max_write_q:
                self.max_write_q = self.n_write
            if not self.holds_write_in_read_queue:
                self._add_wop(Op(OP_WR, dem))
        if len(fifo) == 1:
            self.on_head(dem, now)
        self.poke(now)
        return True

    def _rq_account(self, now):
        self.read_q_area += self.n_read * (now - self._rq_since)
        self._rq_since = now

    def _add_wop(self, op: Op) -> None:
        insort(self.wq[op.bank], op, key=_op_id)
        self.n_wops += 1

    def _remove_rd(self, op: Op, now: int) -> None:
        self.rq[op.bank].remove(op)
        self._rq_account(now)
        self.n_read -= 1
        op.dem.left_queue = now
        self.sys.space_freed(self.ch, now)

    def _free_write_slot(self, now: int) -> None:
        self.n_write -= 1
        self.sys.space_freed(self.ch, now)

    # ------------------------------------------------------------------
    # per-set ordering (keeps the direct-mapped state sequence equal to arrival order)
    # ------------------------------------------------------------------
    def is_head(self, dem: Demand) -> bool:
        return self.sets[dem.set][0] == dem.id

    def release(self, dem: Demand, now: int) -> None:
        fifo = self.sets[dem.set]
        if fifo[0] != dem.id:  # pragma: no cover - internal invariant
            raise ProtocolError(f"request {dem.id} released set {dem.set} out of order")
        fifo.popleft()
        dem.released = True
        if fifo:
            self.on_head(self.live[fifo[0]], now)
        else:
            del self.sets[dem.set]
        self._maybe_retire(dem)
        self.poke(now)

    def on_head(self, dem: Demand, now: int) -> None:
        """Hook: ``dem`` became the oldest outstanding demand of its set."""

    def _maybe_retire(self, dem: Demand) -> None:
        if dem.retired or not dem.released:
            return
        if dem.kind == READ and dem.done < 0:
            return
        if dem.tag_time < 0:
            return
        dem.retired = True
        del self.live[dem.id]
        self.sys.retired(dem)

    # ------------------------------------------------------------------
    # wake-ups
    # ------------------------------------------------------------------
    def poke(self, t: int) -> None:
        if t < self.wake_at:
            self.wake_at = t
            self.ev.schedule(t, self._wake, t)

    def _wake(self, t: int) -> None:
        if t != self.wake_at:
            return
        self.wake_at = INF
        self.schedule_pass(t)

    def schedule_pass(self, now: int) -> None:
        self._passes += 1
        if not self._passes & 1023:
            # nothing can be reserved before ``now`` any more
            self.dev.ledger.prune(now - 50_000)
        if self.refresh_pending:
            self._try_refresh(now)
            return
        issued, nxt = self.try_main(now)
        if issued:
            self.poke(nxt)
            return
        if self.probing:
            p_issued, p_next = self.try_probe(now, nxt)
            if p_issued:
                self.poke(now + self.t.tCMD)
                return
            nxt = min(nxt, p_next)
        if nxt < INF:
            self.poke(nxt)

    # ------------------------------------------------------------------
    # FR-FCFS selection of MAIN commands
    # ------------------------------------------------------------------
    def op_earliest(self, op: Op, now: int) -> int:
        if op.kind == OP_RD:
            if len(self.wb) + self.wb_reserved + self.wb_need > self.cfg.writeback_buffer:
                return INF
            return self.dev.earliest(ACT_RD, op.bank, now, RD_DIR)
        return self.dev.earliest(ACT_WR, op.bank, now, WR_DIR)

    def _pick(self, queues, now):
        """Oldest ready op over the banks' oldest eligible ops, plus the next wake time."""
        best = None
        nxt = INF
        found = False
        sets = self.sets
        dev = self.dev
        banks, t, chan, tags = dev.banks, dev.t, dev.timing, dev.has_tags
        fits = [None, None]
        for q in queues:
            if not q:
                continue
            for op in q:
                if not op.blocked and sets[op.set][0] == op.id:
                    break
            else:
                continue
            found = True
            # bank-side bound first; bus fitting only for banks that are ready now
            bank = banks[op.bank]
            e = bank.busy_until
            if e <= now:
                is_rd = op.kind == OP_RD
                e = earliest_issue(ACT_RD if is_rd else ACT_WR, bank, now, t, chan, tags)
                if e <= now:
                    # the bus fit at ``now`` is the same for every bank of one direction
                    fit = fits[is_rd]
                    if fit is None:
                        fit = fits[is_rd] = self.op_earliest(op, now)
                    e = fit
            if e == now:
                if best is None or op.id < best.id:
                    best = op
            else:
                if e < nxt:
                    nxt = e
                if self.probe_tag_until > now and not op.dem.probe_conflict:
                    self._check_probe_conflict(op, now, e)
        return best, nxt, found

    def _check_probe_conflict(self, op: Op, now: int, e: int) -> None:
        """Flag ``op`` if a probe's tag-mat activity is what keeps it from issuing.

        A probe holding the same bank's tag mats is a bank conflict; the
        channel-wide tag activate spacing is only counted as a delay.
        """
        bank = self.dev.banks[op.bank]
        timing = self.dev.timing
        dem = op.dem
        saved = bank.tag_ready
        bank.tag_ready = self.nonprobe_tag_ready[op.bank]
        try:
            e_bank = self.op_earliest(op, now)
        finally:
            bank.tag_ready = saved
        if e_bank < e:
            dem.probe_conflict = True
            return
        if dem.probe_delayed:
            return
        saved = timing.last_tag_act
        timing.last_tag_act = self.nonprobe_last_tag_act
        try:
            e_chan = self.op_earliest(op, now)
        finally:
            timing.last_tag_act = saved
        if e_chan < e:
            dem.probe_delayed = True
            self.probe_delays += 1

    def try_main(self, now: int):
        cfg = self.cfg
        if self.write_mode:
            if self.n_wops <= cfg.write_low_watermark:
                self.write_mode = False
        elif self.n_wops >= cfg.write_high_watermark:
            self.write_mode = True
        primary, secondary = (self.wq, self.rq) if self.write_mode else (self.rq, self.wq)
        best, nxt, found = self._pick(primary, now)
        if not found:
            best, nxt2, _ = self._pick(secondary, now)
            nxt = min(nxt, nxt2)
        if best is None:
            return False, nxt
        step = self.issue(best, now)
        return True, now + step

    def issue(self, op: Op, now: int) -> int:
        """Issue ``op`` at ``now``; returns the CA time consumed."""
        if op.kind == OP_RD:
            self.issue_rd(op, now)
        elif op.kind == OP_WR:
            return self.issue_wr(op, now)
        elif op.kind == OP_FILL:
            return self.issue_fill(op, now)
        else:
            self.issue_wdata(op, now)
        return self.t.tCMD

    def _note_tag_activate(self, bank: int, now: int) -> None:
        self.nonprobe_tag_ready[bank] = now + self.t.tRC_TAG
        self.nonprobe_last_tag_act = now

    def try_probe(self, now: int, main_next: int):
        return False, INF

    # ------------------------------------------------------------------
    # main-memory traffic
    # ------------------------------------------------------------------
    def start_fetch(self, dem: Demand, now: int) -> None:
        """Get the missing line: flush buffer, in-flight drains, writeback buffer, memory."""
        if dem.fetching:
            return
        dem.fetching = True
        a = dem.addr
        d = self.shadow.get(a)
        if d is None:
            d = self.transit.get(a)
        if d is None:
            ent = self.wb_index.get(a)
            if ent is not None:
                d = ent[1]
        if d is not None:
            dem.forwarded = True
            self.fetch_done(dem, d, now)
        else:
            self.sys.backing_read(self, dem, now)

    def fetch_done(self, dem: Demand, digest, now: int) -> None:
        dem.fill_digest = digest
        dem.resp_digest = digest
        dem.data_ready = True
        dem.done = now + self.sys.t_out
        if not dem.main_needed:
            self._enqueue_fill(dem, now)
        self._maybe_retire(dem)

    def _enqueue_fill(self, dem: Demand, now: int) -> None:
        self._add_wop(Op(OP_FILL, dem))
        self.poke(now)

    def wb_push(self, addr: int, digest, source: int, now: int) -> None:
        self.wb.append((addr, digest, source))
        ent = self.wb_index.get(addr)
        if ent is None:
            self.wb_index[addr] = [1, digest]
        else:
            ent[0] += 1
            ent[1] = digest
        if len(self.wb) > self.wb_max:
            self.wb_max = len(self.wb)
        self.pump_wb(now)

    def pump_wb(self, now: int) -> None:
        wb = self.wb
        freed = False
        while wb:
            addr, digest, source = wb[0]
            if not self.sys.backing_write(self, addr, digest, now):
                break
            wb.popleft()
            ent = self.wb_index[addr]
            ent[0] -= 1
            if ent[0] == 0:
                del self.wb_index[addr]
            freed = True
        if freed:
            self.poke(now)

    def add_bytes(self, dem_id: int, moved: int, useful: int) -> None:
        dem = self.sys.demands[dem_id]
        dem.moved += moved
        dem.useful += useful

    # ------------------------------------------------------------------
    # refresh
    # ------------------------------------------------------------------
    def _refresh_due(self) -> None:
        if not self.sys.busy():
            return  # the run is over; remaining flush entries go out in the final drain
        self.refresh_pending = True
        self.poke(self.ev.now)

    def _try_refresh(self, now: int) -> None:
        dev = self.dev
        ready = now
        for b in dev.banks:
            if b.busy_until > ready:
                ready = b.busy_until
            if dev.has_tags and b.tag_ready > ready:
                ready = b.tag_ready
        ready = dev.ledger.next_free(CA, ready, self.t.tCMD_short)
        if ready > now:
            self.poke(ready)
            return
        end = dev.refresh(now)
        self.refresh_pending = False
        self.refresh_drains(now, end)
        if self.sys.busy():
            self.next_refresh += self.t.tREFI
            self.ev.schedule(max(self.next_refresh, end), self._refresh_due)
        self.poke(end)

    def refresh_drains(self, start: int, end: int) -> None:
        pass

    # ------------------------------------------------------------------
    # audits
    # ------------------------------------------------------------------
    def shadow_matches_device(self) -> bool:
        return True


class TdramController(ChannelController):
    """Controller for a TDRAM channel: ActRd/ActWr, HM handling, probes, flush shadow."""

    def __init__(self, channel: int, system, probing: bool = True):
        self.probing = probing
        super().__init__(channel, system)
        self.probe_guard = max(self.t.tCMD, self.dev.t.tRRD_TAG)

    def make_device(self, audit: bool = False) -> DramChannel:
        return TdramDevice(self.ch, self.cfg, self.sys.amap, audit=audit)

    # -- reads -----------------------------------------------------------
    def issue_rd(self, op: Op, now: int) -> None:
        dem = op.dem
        self._remove_rd(op, now)
        dem.cmd.kind = ACT_RD
        res = self.dev.issue_act_rd(dem.cmd, now)
        self._note_tag_activate(op.bank, now)
        dem.main_needed = False
        if res.bytes:
            dem.moved += res.bytes
            dem.useful += res.bytes
        if res.drained is not None:
            self._drain_started(res.drained, now)
        hm = res.hm
        if hm is not None:
            self.ev.schedule(hm.delivered_at, self.handle_hm, hm, False)
        if res.outcome.is_hit:
            self.release(dem, now)
            self.ev.schedule(res.data[1], self._read_data, dem, res.digest)
        elif res.evicted is not None:
            self.wb_reserved += 1
            self.sys.evicted.append(res.evicted)
            self.ev.schedule(res.data[1], self._dirty_data, dem, res.evicted)
            if dem.data_ready:
                self._enqueue_fill(dem, now)
        elif dem.data_ready:
            self._enqueue_fill(dem, now)

    def _read_data(self, dem: Demand, digest) -> None:
        now = self.ev.now
        dem.resp_digest = digest
        dem.done = now + self.sys.t_out
        self._maybe_retire(dem)

    def _dirty_data(self, dem: Demand, evicted) -> None:
        self.wb_reserved -= 1
        self.wb_push(evicted[0], evicted[1], dem.id, self.ev.now)

    def handle_hm(self, msg: HmMessage, probe: bool) -> None:
        """React to a tag-check result arriving on the HM bus."""
        now = self.ev.now
        dem = self.live.get(msg.request_id)
        if dem is None:
            raise ProtocolError(f"HM message for unknown request {msg.request_id}")
        if dem.tag_time < 0:
            dem.tag_time = now
            dem.outcome = msg.outcome
        if dem.kind != READ:
            self._maybe_retire(dem)
            return
        if probe:
            op = self._find_rd(dem)
            op.blocked = False
            if msg.outcome.is_hit:
                self.poke(now)
                return
            if msg.outcome is O.READ_MISS_DIRTY:
                # the dirty victim still has to come out through a MAIN ActRd
                dem.main_needed = True
            else:
                self._remove_rd(op, now)
            self.start_fetch(dem, now)
            self.poke(now)
            return
        if not msg.hit:
            self.start_fetch(dem, now)
        self._maybe_retire(dem)

    def _find_rd(self, dem: Demand) -> Op:
        for op in self.rq[dem.bank]:
            if op.dem is dem:
                return op
        raise ProtocolError(f"request {dem.id} is not in the read queue")

    # -- probes ---------------------------------------------------------
    def try_probe(self, now: int, main_next: int):
        """Issue a tag probe in an unused CA slot, youngest eligible read first."""
        if main_next < now + self.probe_guard:
            return False, INF
        dev = self.dev
        sets = self.sets
        trc_tag = self.t.tRC_TAG
        best = None
        nxt = INF
        for b, q in enumerate(self.rq):
            if not q:
                continue
            cand = None
            for op in reversed(q):
                if op.dem.probed or op.blocked:
                    continue
                if sets[op.dem.set][0] == op.id:
                    cand = op
                    break
            if cand is None:
                continue
            e = dev.earliest(PROBE, b, now)
            if dev.banks[b].busy_until < e + trc_tag:
                # the probe would hold the tag mats past the data bank's next slot
                continue
            if e == now:
                if best is None or cand.id > best.id:
                    best = cand
            elif e < nxt:
                nxt = e
        if best is None:
            return False, nxt
        self.issue_probe(best, now)
        return True, now + self.t.tCMD

    def issue_probe(self, op: Op, now: int) -> None:
        dem = op.dem
        dem.cmd.kind = PROBE
        msg = self.dev.probe_tag(dem.cmd, now)
        op.blocked = True
        dem.probed = True
        self.probes += 1
        self.probe_tag_until = now + self.t.tRC_TAG
        self.ev.schedule(msg.delivered_at, self.handle_hm, msg, True)

    # -- writes ---------------------------------------------------------
    def _flush_guard(self, now: int) -> Optional[int]:
        """Force a grouped drain if the flush buffer could overflow; returns CA time used."""
        dev = self.dev
        if len(dev.flush) < dev.capacity:
            return None
        t = self.t
        k = min(self.cfg.drain_group, len(dev.flush))
        room = self.cfg.writeback_buffer - len(self.wb) - self.wb_reserved
        if room < k:
            return t.tCMD_short  # wait for the writeback buffer to drain
        s = dev.ledger.next_free(DQ, now + t.flush_read_latency, k * t.line_xfer, RD_DIR)
        start = max(dev.ledger.next_free(CA, now, t.tCMD_short), s - t.flush_read_latency)
        if start > now:
            return start - now
        entries = dev.explicit_drain(now, k)
        self.forced_drains += 1
        self.forced_drain_entries += len(entries)
        for e in entries:
            self._drain_started(e, now)
        return t.tCMD_short

    def issue_wr(self, op: Op, now: int) -> int:
        step = self._flush_guard(now)
        if step is not None:
            return step
        dem = op.dem
        self.wq[op.bank].remove(op)
        self.n_wops -= 1
        if dem.addr in self.shadow:
            # a newer write supersedes the buffered victim
            entry = self.dev.remove(dem.addr, now)
            del self.shadow[dem.addr]
            self.superseded += 1
            self.sys.superseded.append((entry.addr, entry.payload_digest))
        dem.cmd.kind = ACT_WR
        dem.cmd.fill = False
        res = self.dev.issue_act_wr(dem.cmd, now, dem.payload)
        self._note_tag_activate(op.bank, now)
        dem.left_queue = now
        dem.moved += res.bytes
        dem.useful += res.bytes
        dem.done = res.data[1]
        if res.flushed is not None:
            self.shadow[res.flushed.addr] = res.flushed.payload_digest
            self.sys.evicted.append((res.flushed.addr, res.flushed.payload_digest))
        if res.hm is not None:
            self.ev.schedule(res.hm.delivered_at, self.handle_hm, res.hm, False)
        else:
            dem.tag_time = dem.enqueued
            dem.outcome = res.outcome
        self._free_write_slot(now)
        self.release(dem, now)
        return self.t.tCMD

    def issue_fill(self, op: Op, now: int) -> int:
        step = self._flush_guard(now)
        if step is not None:
            return step
        dem = op.dem
        self.wq[op.bank].remove(op)
        self.n_wops -= 1
        dem.cmd.kind = ACT_WR
        dem.cmd.fill = True
        res = self.dev.issue_act_wr(dem.cmd, now, dem.fill_digest)
        self._note_tag_activate(op.bank, now)
        dem.moved += res.bytes
        dem.useful += res.bytes
        if res.flushed is not None:  # pragma: no cover - the set is cleaned before a fill
            self.shadow[res.flushed.addr] = res.flushed.payload_digest
            self.sys.evicted.append((res.flushed.addr, res.flushed.payload_digest))
        self.release(dem, now)
        return self.t.tCMD

    # -- flush buffer unloading -------------------------------------------
    def _drain_started(self, entry: FlushBufferEntry, now: int) -> None:
        del self.shadow[entry.addr]
        self.transit[entry.addr] = entry.payload_digest
        self.wb_reserved += 1
        self.drains[entry.drain_kind] += 1
        self.ev.schedule(entry.drained_at, self._drain_arrived, entry)

    def _drain_arrived(self, entry: FlushBufferEntry) -> None:
        now = self.ev.now
        if self.transit.get(entry.addr) == entry.payload_digest:
            del self.transit[entry.addr]
        self.wb_reserved -= 1
        useful = LINE_BYTES if self.cfg.drains_count_useful else 0
        self.add_bytes(entry.source_id, LINE_BYTES, useful)
        self.wb_push(entry.addr, entry.payload_digest, entry.source_id, now)

    def refresh_drains(self, start: int, end: int) -> None:
        room = self.cfg.writeback_buffer - len(self.wb) - self.wb_reserved
        if room <= 0 or not self.dev.flush:
            return
        for e in self.dev.refresh_drains(start, end, room):
            self._drain_started(e, start)

    def final_drain(self) -> list:
        """Entries still buffered when the trace ends go straight to main memory."""
        out = []
        now = self.ev.now
        while self.dev.flush:
            entry = self.dev._pop_oldest(now)
            del self.shadow[entry.addr]
            self.drains["Final"] += 1
            useful = LINE_BYTES if self.cfg.drains_count_useful else 0
            self.add_bytes(entry.source_id, LINE_BYTES, useful)
            out.append(entry)
        return out

    def shadow_matches_device(self) -> bool:
        return self.shadow == {a: e.payload_digest for a, e in self.dev.flush.items()}


def read_queue_average(ctrl: ChannelController, now: int) -> float:
    ctrl._rq_account(now)
    return ctrl.read_q_area / now if now else 0.0


__all__ = ["ChannelController", "Demand", "Op", "ProtocolError", "TdramController",
           "read_queue_average", "ns"]
