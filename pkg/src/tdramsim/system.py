"""Whole-system run: trace feeder, per-channel controllers, main memory, final audits."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .backing import BackingConfig, BackingStore
from .baselines import BaselineKind, make_controller
from .controller import Demand, read_queue_average
from .core import (READ, AddressMap, LineState, MemRequest, SimConfig, initial_digest, ns, ps,
                   write_digest)
from .metrics import EventCounts, StatsRecord
from .tdram import TdramDevice
from .timing import EventQueue


class SimulationError(RuntimeError):
    pass


@dataclass
class RunResult:
    kind: BaselineKind
    records: list  # StatsRecord per demand, ordered by id
    image: dict  # addr -> digest: architecturally visible contents of every touched line
    counts: EventCounts
    stats: dict = field(default_factory=dict)
    audit: dict = field(default_factory=dict)
    cache_state: dict = field(default_factory=dict)  # line addr -> (dirty, digest)

    @property
    def outcomes(self) -> list:
        return [r.outcome for r in self.records]


class System:
    """One simulated DRAM cache of a given design fed by one trace."""

    def __init__(self, cfg: SimConfig, kind: BaselineKind, requests: Sequence[MemRequest],
                 preload: Iterable = (), audit: bool = False):
        self.cfg = cfg.validate()
        self.kind = kind
        self.audit = audit
        self.amap = AddressMap(cfg)
        self.events = EventQueue()
        self.t_in = ps(cfg.ctrl_latency_in)
        self.t_out = ps(cfg.ctrl_latency_out)
        self.backing = BackingStore(BackingConfig.from_sim(cfg))
        self.requests = list(requests)
        self.demands = {}
        self.evicted = []  # (addr, digest) of every dirty version pushed out of the cache
        self.superseded = []  # buffered victims overwritten before reaching memory
        self.n_retired = 0
        self._next = 0
        self._pending: Optional[Demand] = None
        self._blocked_ch = -1
        self._feed_at = -1
        self._retry_at = -1
        self._read_waiters = []
        self.ctrls = [make_controller(kind, ch, self) for ch in range(cfg.channels)]
        for addr, dirty, digest in preload:
            d = self.amap.decode(addr)
            self.ctrls[d.channel].dev.lines[d.set] = LineState(True, dirty, d.tag, digest)

    # -- feeder -----------------------------------------------------------
    def _schedule_feed(self, t: int) -> None:
        if self._feed_at < 0 or t < self._feed_at:
            self._feed_at = t
            self.events.schedule(t, self._feed, t)

    def _feed(self, t: int) -> None:
        if t != self._feed_at:
            return
        self._feed_at = -1
        now = self.events.now
        reqs = self.requests
        while self._next < len(reqs):
            dem = self._pending
            if dem is None:
                req = reqs[self._next]
                payload = None
                if req.kind != READ:
                    payload = req.payload_digest
                    if payload is None:
                        payload = write_digest(req.addr, req.id)
                dem = Demand(req, self.amap.decode(req.addr), payload, ps(req.arrival))
                self._pending = dem
            t_enq = dem.arrival + self.t_in
            if t_enq > now:
                self._schedule_feed(t_enq)
                return
            self.demands[dem.id] = dem
            if not self.ctrls[dem.ch].enqueue_demand(dem, now):
                # in-order feeder: wait for this channel to free a buffer slot
                self._blocked_ch = dem.ch
                return
            self._pending = None
            self._next += 1

    def space_freed(self, ch: int, now: int) -> None:
        if ch == self._blocked_ch:
            self._blocked_ch = -1
            self._schedule_feed(now)

    def retired(self, dem: Demand) -> None:
        self.n_retired += 1

    def busy(self) -> bool:
        if self.n_retired < len(self.requests):
            return True
        return any(c.wb or c.transit or c.wb_reserved for c in self.ctrls)

    # -- main memory ---------------------------------------------------------
    def backing_read(self, ctrl, dem: Demand, now: int) -> None:
        r = self.backing.read(dem.addr, now)
        if r is None:
            self._read_waiters.append((ctrl, dem))
            self._schedule_retry(self.backing.next_slot(dem.addr, now))
            return
        self.events.schedule(r[0], self._deliver, ctrl, dem, r[1])

    def _deliver(self, ctrl, dem: Demand, digest) -> None:
        ctrl.fetch_done(dem, digest, self.events.now)

    def backing_write(self, ctrl, addr: int, digest, now: int) -> bool:
        if self.backing.write(addr, digest, now) is None:
            self._schedule_retry(self.backing.next_slot(addr, now))
            return False
        return True

    def _schedule_retry(self, t: int) -> None:
        if t <= self.events.now:
            t = self.events.now + 1
        if self._retry_at < 0 or t < self._retry_at:
            self._retry_at = t
            self.events.schedule(t, self._retry, t)

    def _retry(self, t: int) -> None:
        if t != self._retry_at:
            return
        self._retry_at = -1
        now = self.events.now
        waiters, self._read_waiters = self._read_waiters, []
        for ctrl, dem in waiters:
            self.backing_read(ctrl, dem, now)
        for c in self.ctrls:
            if c.wb:
                c.pump_wb(now)

    # -- run ---------------------------------------------------------------
    def run(self) -> RunResult:
        if self.requests:
            self._schedule_feed(0)
        self.events.run()
        if self.n_retired != len(self.requests):
            stuck = sorted(set(self.demands) - {d.id for d in self.demands.values() if d.retired})
            raise SimulationError(f"{len(self.requests) - self.n_retired} requests never "
                                  f"completed (first ids {stuck[:5]})")
        # the clock may sit on a no-op refresh event; the run ends with its last completion
        end = max((d.done for d in self.demands.values()), default=0)
        for c in self.ctrls:
            if hasattr(c, "final_drain"):
                for e in c.final_drain():
                    self.backing.commit(e.addr, e.payload_digest)
        return self._result(end)

    def memory_image(self) -> dict:
        image = dict(self.backing.mem)
        for c in self.ctrls:
            for s, line in c.dev.lines.items():
                if line.valid and line.dirty:
                    image[self.amap.line_addr(s, line.tag)] = line.payload_digest
        return image

    def _result(self, end: int) -> RunResult:
        cfg = self.cfg
        records = []
        for i in sorted(self.demands):
            d = self.demands[i]
            records.append(StatsRecord(
                id=d.id, kind="R" if d.kind == READ else "W", addr=d.addr, outcome=d.outcome,
                tag_check_latency=ns(d.tag_time - d.enqueued),
                queueing_delay=ns(d.left_queue - d.enqueued),
                end_to_end=ns(d.done - d.arrival),
                bytes_moved=d.moved, bytes_useful=d.useful,
                forwarded=d.forwarded, probe_conflict=d.probe_conflict))
        devs = [c.dev for c in self.ctrls]
        counts = EventCounts(
            activates=sum(d.activates for d in devs), columns=sum(d.columns for d in devs),
            dq_bytes=sum(d.dq_bytes for d in devs), hm_beats=sum(d.hm_beats for d in devs),
            tag_accesses=sum(d.tag_accesses for d in devs), sim_time_ns=ns(end))
        stats = {
            "sim_time_ns": ns(end),
            "refreshes": sum(d.refreshes for d in devs),
            "probes": sum(c.probes for c in self.ctrls),
            "probe_conflicts": sum(r.probe_conflict for r in records),
            "probe_tag_spacing_delays": sum(c.probe_delays for c in self.ctrls),
            "forced_drains": sum(c.forced_drains for c in self.ctrls),
            "forced_drain_entries": sum(c.forced_drain_entries for c in self.ctrls),
            "superseded": len(self.superseded),
            "bus_violations": sum(d.ledger.total_violations for d in devs),
            "timing_violations": sum(d.timing_violations for d in devs),
            "max_read_queue": max(c.max_read_q for c in self.ctrls),
            "max_write_queue": max(c.max_write_q for c in self.ctrls),
            "mean_read_queue": (sum(read_queue_average(c, end) for c in self.ctrls)
                                / len(self.ctrls)),
            "max_writeback_buffer": max(c.wb_max for c in self.ctrls),
            "backing_reads": self.backing.reads,
            "backing_writes": len(self.backing.writes),
            "forwarded_reads": sum(r.forwarded for r in records),
        }
        drains = Counter()
        for c in self.ctrls:
            drains.update(c.drains)
        for k in ("ReadMissCleanSlot", "Refresh", "Explicit", "Final"):
            stats[f"drains_{k}"] = drains[k]
        if isinstance(devs[0], TdramDevice):
            stats["flush_max_occupancy"] = max(d.max_occupancy for d in devs)
            stats["flush_mean_occupancy"] = sum(d.occupancy_average(end) for d in devs) / len(devs)
            stats["flush_overflow_stalls"] = sum(d.overflow_stalls for d in devs)
        image = self.memory_image()
        state = {}
        for c in self.ctrls:
            for s, line in c.dev.lines.items():
                if line.valid:
                    state[self.amap.line_addr(s, line.tag)] = (line.dirty, line.payload_digest)
        return RunResult(self.kind, records, image, counts, stats, self._audit(image), state)

    def _audit(self, image: dict) -> dict:
        """End-of-run consistency checks; every value is True when the run is sound."""
        out = {}
        out["dirty_preserved"] = (Counter(self.evicted)
                                  == Counter(self.backing.writes) + Counter(self.superseded))
        coherent = True
        for c in self.ctrls:
            for s, line in c.dev.lines.items():
                if line.valid and not line.dirty:
                    a = self.amap.line_addr(s, line.tag)
                    if image.get(a, initial_digest(a)) != line.payload_digest:
                        coherent = False
        out["clean_lines_match_memory"] = coherent
        out["flush_shadow_consistent"] = all(c.shadow_matches_device() for c in self.ctrls)
        out["buffers_within_capacity"] = all(
            c.max_read_q <= self.cfg.read_buffer and c.max_write_q <= self.cfg.write_buffer
            and c.wb_max <= self.cfg.writeback_buffer for c in self.ctrls)
        return out


def simulate(cfg: SimConfig, kind, requests: Sequence[MemRequest], preload: Iterable = (),
             audit: bool = False) -> RunResult:
    """Run ``requests`` through a cache of design ``kind`` and collect the results."""
    if isinstance(kind, str):
        kind = BaselineKind.parse(kind)
    return System(cfg, kind, requests, preload, audit).run()
