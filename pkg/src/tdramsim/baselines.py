"""Comparison designs: tags-in-DRAM (Cascade Lake style), Alloy bursts, Ideal tags."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .controller import OP_WDATA, ChannelController, Demand, Op, TdramController
from .core import LINE_BYTES, READ, AccessOutcome, SimConfig, classify_access
from .tdram import DramChannel, TdramDevice

O = AccessOutcome


class BaselineKind(enum.Enum):
    CascadeLake = "CascadeLake"
    Alloy = "Alloy"
    Ideal = "Ideal"
    TdramNoProbe = "TdramNoProbe"
    Tdram = "Tdram"

    @classmethod
    def parse(cls, name: str) -> "BaselineKind":
        key = name.replace("-", "").replace("_", "").lower()
        for k in cls:
            if k.value.lower() == key:
                return k
        raise ValueError(f"unknown device kind {name!r}; choose from "
                         + ", ".join(k.value for k in cls))


ALL_KINDS = tuple(BaselineKind)
ALLOY_SCALE = 80 / 64


@dataclass(frozen=True)
class Step:
    """One DQ transfer of a transaction plan."""

    command: str
    moved: int
    useful: int


def transaction_plan(kind: BaselineKind, outcome: AccessOutcome) -> list:
    """DQ transfers a demand with ``outcome`` causes on ``kind``, in issue order.

    Flush-buffer drains are listed under the write miss that created them.
    """
    if kind in (BaselineKind.CascadeLake, BaselineKind.Alloy):
        unit = 80 if kind is BaselineKind.Alloy else LINE_BYTES
        if outcome.is_read and outcome.is_hit:
            return [Step("tag+data read", unit, LINE_BYTES)]
        first = Step("tag+data read", unit, LINE_BYTES if outcome.evicts_dirty else 0)
        if outcome.is_read:
            return [first, Step("fill write", unit, LINE_BYTES)]
        return [first, Step("data write", unit, LINE_BYTES)]
    # TDRAM variants and Ideal move data only when the outcome needs it
    if outcome.is_read and outcome.is_hit:
        return [Step("ActRd", LINE_BYTES, LINE_BYTES)]
    if outcome is O.READ_MISS_DIRTY:
        return [Step("ActRd", LINE_BYTES, LINE_BYTES), Step("fill ActWr", LINE_BYTES, LINE_BYTES)]
    if outcome.is_read:
        return [Step("fill ActWr", LINE_BYTES, LINE_BYTES)]
    if outcome is O.WRITE_MISS_DIRTY:
        return [Step("ActWr", LINE_BYTES, LINE_BYTES), Step("flush drain", LINE_BYTES, LINE_BYTES)]
    return [Step("ActWr", LINE_BYTES, LINE_BYTES)]


def tag_ready_ns(kind: BaselineKind, cfg: SimConfig) -> float:
    """Unloaded delay from the tag-check command to the hit/miss result."""
    if kind is BaselineKind.Ideal:
        return 0.0
    if kind in (BaselineKind.Tdram, BaselineKind.TdramNoProbe):
        return cfg.tRCD_TAG + cfg.tHM
    scale = ALLOY_SCALE if kind is BaselineKind.Alloy else 1.0
    # tag bits ride in the first burst of the line
    return cfg.tRCD + cfg.tCL + cfg.tBURST * scale


class CascadeController(ChannelController):
    """Tags stored with the data: every demand starts with a DRAM read.

    ``burst_scale`` = 80/64 gives the Alloy tag-and-data unit.
    """

    holds_write_in_read_queue = True
    wb_need = 1  # a tag read can surface one dirty victim

    def __init__(self, channel: int, system, burst_scale: float = 1.0):
        self.burst_scale = burst_scale
        super().__init__(channel, system)

    def make_device(self, audit: bool = False) -> DramChannel:
        return DramChannel(self.ch, self.cfg, self.sys.amap, self.burst_scale, audit)

    def issue_rd(self, op: Op, now: int) -> None:
        dem = op.dem
        self._remove_rd(op, now)
        (start, end), line = self.dev.read(dem.cmd, now)
        outcome = classify_access(dem.kind, line, dem.tag)
        dem.moved += self.dev.transfer_bytes
        evicted = None
        digest = None
        if outcome.is_read and outcome.is_hit:
            dem.useful += LINE_BYTES
            digest = line.payload_digest
            self.release(dem, now)
        elif outcome.evicts_dirty:
            dem.useful += LINE_BYTES
            evicted = (self.sys.amap.line_addr(dem.set, line.tag), line.payload_digest)
            line.dirty = False  # the controller owns the dirty copy from here
            self.sys.evicted.append(evicted)
            self.wb_reserved += 1
        self.ev.schedule(start + self.dev.t.tBURST, self._tag_ready, dem, outcome, end,
                         evicted, digest)

    def _tag_ready(self, dem: Demand, outcome, data_end: int, evicted, digest) -> None:
        now = self.ev.now
        dem.tag_time = now
        dem.outcome = outcome
        if evicted is not None:
            self.ev.schedule(data_end, self._dirty_data, dem, evicted)
        if outcome.is_read and outcome.is_hit:
            dem.resp_digest = digest
            dem.done = data_end + self.sys.t_out
            self._maybe_retire(dem)
        elif dem.kind == READ:
            self.start_fetch(dem, now)
        else:
            self._add_wop(Op(OP_WDATA, dem))
            self.poke(now)

    def _dirty_data(self, dem: Demand, evicted) -> None:
        self.wb_reserved -= 1
        self.wb_push(evicted[0], evicted[1], dem.id, self.ev.now)

    def issue_wdata(self, op: Op, now: int) -> None:
        dem = op.dem
        self.wq[op.bank].remove(op)
        self.n_wops -= 1
        start, end = self.dev.write(dem.cmd, now, dem.payload, dirty=True)
        dem.moved += self.dev.transfer_bytes
        dem.useful += LINE_BYTES
        dem.done = end
        self._free_write_slot(now)
        self.release(dem, now)

    def issue_fill(self, op: Op, now: int) -> int:
        dem = op.dem
        self.wq[op.bank].remove(op)
        self.n_wops -= 1
        self.dev.write(dem.cmd, now, dem.fill_digest, dirty=False)
        dem.moved += self.dev.transfer_bytes
        dem.useful += LINE_BYTES
        self.release(dem, now)
        return self.t.tCMD


class IdealController(TdramController):
    """Outcome known for free once a demand is the oldest of its set; no HM traffic."""

    def __init__(self, channel: int, system):
        super().__init__(channel, system, probing=False)

    def make_device(self, audit: bool = False) -> DramChannel:
        return TdramDevice(self.ch, self.cfg, self.sys.amap, audit=audit, tag_timing=False)

    def on_head(self, dem: Demand, now: int) -> None:
        outcome = classify_access(dem.kind, self.dev.lines.get(dem.set), dem.tag)
        dem.outcome = outcome
        dem.tag_time = dem.enqueued
        if dem.kind != READ or outcome.is_hit:
            return
        if outcome is O.READ_MISS_DIRTY:
            dem.main_needed = True
        else:
            self._remove_rd(self._find_rd(dem), now)
        self.start_fetch(dem, now)


def make_controller(kind: BaselineKind, channel: int, system) -> ChannelController:
    if kind is BaselineKind.Tdram:
        return TdramController(channel, system, probing=system.cfg.probing)
    if kind is BaselineKind.TdramNoProbe:
        return TdramController(channel, system, probing=False)
    if kind is BaselineKind.CascadeLake:
        return CascadeController(channel, system)
    if kind is BaselineKind.Alloy:
        return CascadeController(channel, system, ALLOY_SCALE)
    if kind is BaselineKind.Ideal:
        return IdealController(channel, system)
    raise ValueError(kind)
