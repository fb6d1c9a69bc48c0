"""Main memory behind the DRAM cache: fixed device latency, per-channel bandwidth, link delay."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .core import LINE_SHIFT, ConfigError, initial_digest, ps

LINK_LATENCIES_NS = (0, 50, 100, 250, 500)


@dataclass(frozen=True)
class BackingConfig:
    channels: int = 2
    latency_ns: float = 50.0  # fixed device access latency
    transfer_ns: float = 2.0  # one 64B line per channel slot (32 GB/s)
    queue_depth: int = 64  # per channel, reads and writes each
    link_latency_ns: float = 0.0  # added once per access (round trip)

    def __post_init__(self):
        errors = {}
        if self.channels < 1:
            errors["backing_channels"] = "need at least one channel"
        if self.latency_ns < 0 or self.transfer_ns <= 0:
            errors["backing_latency"] = "latencies must be nonnegative and transfer positive"
        if self.queue_depth < 1:
            errors["backing_queue"] = "queue depth must be positive"
        if self.link_latency_ns < 0:
            errors["link_latency"] = "link latency must be nonnegative"
        if errors:
            raise ConfigError(errors)

    @classmethod
    def from_sim(cls, cfg) -> "BackingConfig":
        return cls(cfg.backing_channels, cfg.backing_latency, cfg.backing_transfer,
                   cfg.backing_queue, cfg.link_latency)


class BackingStore:
    """Line-interleaved channels, each a FIFO with one transfer slot per line.

    Contents change when an access is accepted, so accesses to one address
    take effect in acceptance order; since an address always maps to the
    same channel FIFO, timing order agrees.
    """

    def __init__(self, bc: BackingConfig):
        self.bc = bc
        self.latency = ps(bc.latency_ns) + ps(bc.link_latency_ns)
        self.transfer = ps(bc.transfer_ns)
        self.free_at = [0] * bc.channels
        self._rd_starts = [deque() for _ in range(bc.channels)]
        self._wr_starts = [deque() for _ in range(bc.channels)]
        self.mem = {}  # addr -> digest of lines written back
        self.writes = []  # (addr, digest) per committed write, in order
        self.reads = 0

    def channel_of(self, addr: int) -> int:
        return (addr >> LINE_SHIFT) % self.bc.channels

    def _waiting(self, q: deque, now: int) -> int:
        while q and q[0] <= now:
            q.popleft()
        return len(q)

    def _slot(self, ch: int, q: deque, now: int) -> Optional[int]:
        if self._waiting(q, now) >= self.bc.queue_depth:
            return None
        start = max(now, self.free_at[ch])
        self.free_at[ch] = start + self.transfer
        if start > now:
            q.append(start)
        return start

    def read(self, addr: int, now: int) -> Optional[tuple]:
        """Returns ``(arrival_ps, digest)`` or ``None`` when the read queue is full."""
        ch = self.channel_of(addr)
        start = self._slot(ch, self._rd_starts[ch], now)
        if start is None:
            return None
        self.reads += 1
        d = self.mem.get(addr)
        return start + self.latency, initial_digest(addr) if d is None else d

    def write(self, addr: int, digest, now: int) -> Optional[int]:
        """Returns the completion time, or ``None`` when the write queue is full."""
        ch = self.channel_of(addr)
        start = self._slot(ch, self._wr_starts[ch], now)
        if start is None:
            return None
        self.commit(addr, digest)
        return start + self.latency

    def commit(self, addr: int, digest) -> None:
        self.mem[addr] = digest
        self.writes.append((addr, digest))

    def next_slot(self, addr: int, now: int) -> int:
        """When a full queue for ``addr``'s channel next has room."""
        ch = self.channel_of(addr)
        heads = [q[0] for q in (self._rd_starts[ch], self._wr_starts[ch]) if q]
        return max(now, min(heads)) if heads else now
