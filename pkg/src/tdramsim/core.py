"""Domain types shared by every part of the simulator.

Times in a :class:`SimConfig` are given in nanoseconds, the unit DRAM
datasheets use. The simulator itself runs on integer picoseconds (see
:func:`ps`) so that the half-nanosecond timing values never accumulate
floating point drift.
"""
from __future__ import annotations

import dataclasses
import enum
import hashlib
from dataclasses import dataclass, field
from typing import Optional

LINE_BYTES = 64
LINE_SHIFT = 6

KiB = 1 << 10
MiB = 1 << 20
GiB = 1 << 30
TiB = 1 << 40
PiB = 1 << 50

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Raised for an invalid :class:`SimConfig`; ``errors`` maps field -> message."""

    def __init__(self, errors):
        self.errors = dict(errors)
        text = "; ".join(f"{k}: {v}" for k, v in self.errors.items())
        super().__init__(f"invalid configuration: {text}")


class AddressError(ValueError):
    pass


def ps(ns: float) -> int:
    """Convert nanoseconds to integer picoseconds."""
    return int(round(ns * 1000))


def ns(t_ps: int) -> float:
    return t_ps / 1000.0


# --------------------------------------------------------------------------
# Payload surrogates
# --------------------------------------------------------------------------

def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def write_digest(addr: int, write_id: int) -> int:
    """8-byte digest standing in for the 64B payload written by ``write_id``."""
    return _splitmix64((addr * 0x100000001B3) ^ _splitmix64(write_id + 1))


def initial_digest(addr: int) -> int:
    """Contents of a line of main memory that has never been written."""
    return _splitmix64(addr ^ 0x5DEECE66D)


def expand_payload(digest: int) -> bytes:
    """Full 64B line contents for a digest (used when ``full_payload`` is on)."""
    return hashlib.blake2b(digest.to_bytes(8, "little"), digest_size=LINE_BYTES).digest()


# --------------------------------------------------------------------------
# Requests, lines and outcomes
# --------------------------------------------------------------------------

class ReqKind(enum.IntEnum):
    READ = 0
    WRITE = 1


READ = ReqKind.READ
WRITE = ReqKind.WRITE


@dataclass(frozen=True)
class MemRequest:
    """A demand from the LLC: a read miss or a dirty writeback."""

    kind: ReqKind
    addr: int
    arrival: float  # ns
    id: int
    payload_digest: Optional[int] = None

    @property
    def is_read(self) -> bool:
        return self.kind == READ


@dataclass(slots=True)
class LineState:
    valid: bool = False
    dirty: bool = False
    tag: int = 0
    payload_digest: int = 0

    def __post_init__(self):
        if self.dirty and not self.valid:
            raise ValueError("a dirty line must be valid")


class AccessOutcome(enum.Enum):
    READ_HIT_CLEAN = "ReadHitClean"
    READ_HIT_DIRTY = "ReadHitDirty"
    READ_INVALID = "ReadInvalid"
    READ_MISS_CLEAN = "ReadMissClean"
    READ_MISS_DIRTY = "ReadMissDirty"
    WRITE_INVALID = "WriteInvalid"
    WRITE_MISS_CLEAN = "WriteMissClean"
    WRITE_MISS_DIRTY = "WriteMissDirty"
    WRITE_HIT_CLEAN = "WriteHitClean"
    WRITE_HIT_DIRTY = "WriteHitDirty"

    @property
    def is_read(self) -> bool:
        return self.value.startswith("Read")

    @property
    def is_hit(self) -> bool:
        return "Hit" in self.value

    @property
    def is_miss(self) -> bool:
        return not self.is_hit

    @property
    def evicts_dirty(self) -> bool:
        return self in (AccessOutcome.READ_MISS_DIRTY, AccessOutcome.WRITE_MISS_DIRTY)


O = AccessOutcome

_READ_TABLE = {
    # (dirty, tag match) -> outcome, for valid lines
    (False, True): O.READ_HIT_CLEAN,
    (True, True): O.READ_HIT_DIRTY,
    (False, False): O.READ_MISS_CLEAN,
    (True, False): O.READ_MISS_DIRTY,
}
_WRITE_TABLE = {
    (False, True): O.WRITE_HIT_CLEAN,
    (True, True): O.WRITE_HIT_DIRTY,
    (False, False): O.WRITE_MISS_CLEAN,
    (True, False): O.WRITE_MISS_DIRTY,
}


def classify_access(kind: ReqKind, line: Optional[LineState], req_tag: int) -> AccessOutcome:
    """Classify an access against the line currently held in its set.

    ``line`` may be ``None`` for a set that was never filled; it is treated
    like an invalid line.
    """
    if line is None or not line.valid:
        return O.READ_INVALID if kind == READ else O.WRITE_INVALID
    table = _READ_TABLE if kind == READ else _WRITE_TABLE
    return table[(line.dirty, line.tag == req_tag)]


def _log2_exact(n: int, name: str) -> int:
    if n <= 0 or n & (n - 1):
        raise ValueError(f"{name} must be a positive power of two, got {n}")
    return n.bit_length() - 1


def tag_bits(cache_capacity: int, address_space: int) -> int:
    """Tag width of a direct-mapped cache covering ``address_space`` bytes."""
    c = _log2_exact(cache_capacity, "cache_capacity")
    a = _log2_exact(address_space, "address_space")
    if a < c:
        raise ValueError("address space smaller than the cache")
    return a - c


# --------------------------------------------------------------------------
# Energy coefficients (lives here because SimConfig embeds them)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyCoefficients:
    """Per-event energy in arbitrary units (pJ-like); relative comparisons only.

    Defaults make DQ movement the dominant term for a typical run.
    """

    activate: float = 900.0
    column: float = 300.0
    dq_byte: float = 31.25
    hm_beat: float = 15.6
    tag_mat: float = 120.0
    background_per_ns: float = 2.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"energy coefficient {f.name} must be nonnegative")


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

@dataclass
class SimConfig:
    """Every knob of a simulation run.

    The DRAM timing names follow the usual datasheet spelling (``tRCD``,
    ``tRCD_TAG`` ...). Geometry defaults give 8 channels x 1 GiB; use
    :meth:`desk` for a small cache that warms up within a short trace.
    """

    # data-bank timing (ns)
    tBURST: float = 2.0
    tRCD: float = 12.0
    tRCD_WR: float = 6.0
    tCCD_L: float = 2.0
    tRP: float = 14.0
    tRAS: float = 28.0
    tCL: float = 18.0
    tCWL: float = 7.0
    tRRD: float = 2.0
    tFAW: float = 16.0
    tRL_core: float = 2.0
    tRC: Optional[float] = None  # defaults to tRAS + tRP
    # tag-mat timing (ns)
    tHM: float = 7.5
    tHM_int: float = 2.5
    tRCD_TAG: float = 7.5
    tRTP_TAG: float = 2.5
    tRRD_TAG: float = 2.0
    tWR_TAG: float = 1.0
    tRTW_TAG: float = 1.0
    tRC_TAG: float = 12.0
    # internal read command to write data on the array
    int_rd_to_wr_data_delay: float = 8.0
    # refresh
    tREFI: float = 3900.0
    tRFC: float = 160.0
    # bus details
    tCMD: float = 1.0  # CA occupancy of ActRd/ActWr/probe
    tCMD_short: float = 0.5  # CA occupancy of refresh / drain commands
    tTURN: float = 2.0  # DQ read<->write direction change
    hm_beat_ns: float = 0.125
    hm_status_beats: int = 4
    hm_tag_beats: int = 8
    flush_read_latency: float = 18.0  # explicit drain command to first data beat
    # controller
    ctrl_latency_in: float = 10.0
    ctrl_latency_out: float = 10.0
    read_buffer: int = 64
    write_buffer: int = 64
    writeback_buffer: int = 64
    write_high_watermark: int = 48
    write_low_watermark: int = 16
    flush_capacity: int = 16
    drain_group: int = 4
    probing: bool = True
    # geometry
    channels: int = 8
    banks_per_channel: int = 8  # logical banks (pairs across bank groups)
    banks_per_group: int = 4
    ranks: int = 1
    columns: int = 32
    rows: int = 1 << 16
    address_space: int = 128 * GiB
    # backing store
    backing_channels: int = 2
    backing_latency: float = 50.0
    backing_transfer: float = 2.0
    backing_queue: int = 64
    link_latency: float = 0.0
    # energy & accounting
    energy: EnergyCoefficients = field(default_factory=EnergyCoefficients)
    drains_count_useful: bool = True
    full_payload: bool = False
    # misc
    seed: int = 0
    strict: bool = True

    @classmethod
    def desk(cls, **overrides) -> "SimConfig":
        """A 2 MiB cache (16 rows per bank) with paper timing, for short traces."""
        kw = dict(rows=16)
        kw.update(overrides)
        return cls(**kw)

    # derived geometry ---------------------------------------------------
    @property
    def row_cycle(self) -> float:
        return self.tRAS + self.tRP if self.tRC is None else self.tRC

    @property
    def cache_lines(self) -> int:
        return self.channels * self.banks_per_channel * self.ranks * self.columns * self.rows

    @property
    def cache_capacity(self) -> int:
        return self.cache_lines * LINE_BYTES

    @property
    def field_widths(self) -> dict:
        """Bit widths of each line-address field, lowest first (Ch, Ba, Ra, Co, Ro)."""
        return {
            "channel": _log2_exact(self.channels, "channels"),
            "bank": _log2_exact(self.banks_per_channel, "banks_per_channel"),
            "rank": _log2_exact(self.ranks, "ranks"),
            "column": _log2_exact(self.columns, "columns"),
            "row": _log2_exact(self.rows, "rows"),
        }

    @property
    def set_bits(self) -> int:
        return sum(self.field_widths.values())

    @property
    def tag_width(self) -> int:
        return tag_bits(self.cache_capacity, self.address_space)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> "SimConfig":
        errors = {}
        if self.tRCD_TAG + self.tHM_int > self.tRCD:
            errors["tRCD_TAG"] = (
                f"hiding condition violated: tRCD_TAG + tHM_int = "
                f"{self.tRCD_TAG + self.tHM_int:g} ns exceeds tRCD = {self.tRCD:g} ns"
            )
        if self.tRL_core > self.int_rd_to_wr_data_delay + self.tBURST / 2:
            errors["tRL_core"] = (
                f"tRL_core = {self.tRL_core:g} ns exceeds internal read-to-write-data "
                f"delay + tBURST/2 = {self.int_rd_to_wr_data_delay + self.tBURST / 2:g} ns"
            )
        for name in ("tBURST", "tRCD", "tCL", "tRAS", "tRP", "tRC_TAG", "tCMD", "tREFI", "tRFC"):
            if getattr(self, name) <= 0:
                errors[name] = "must be positive"
        for name in ("tRCD_WR", "tCWL", "tCCD_L", "tRRD", "tFAW", "tHM", "tHM_int",
                     "tRCD_TAG", "tRRD_TAG", "tTURN", "link_latency", "backing_latency"):
            if getattr(self, name) < 0:
                errors[name] = "must be nonnegative"
        if self.tRFC >= self.tREFI:
            errors["tRFC"] = "refresh must be shorter than the refresh interval"
        for name in ("read_buffer", "write_buffer", "writeback_buffer", "flush_capacity",
                     "drain_group", "backing_channels", "backing_queue"):
            if getattr(self, name) < 1:
                errors[name] = "must be at least 1"
        if not 0 <= self.write_low_watermark < self.write_high_watermark <= self.write_buffer:
            errors["write_high_watermark"] = "need 0 <= low < high <= write_buffer"
        try:
            self.field_widths
        except ValueError as exc:
            errors["geometry"] = str(exc)
        else:
            try:
                self.tag_width
            except ValueError as exc:
                errors["address_space"] = str(exc)
        if self.banks_per_channel > self.banks_per_group * 2 * 8:
            errors["banks_per_channel"] = "too many bank pairs for the bank-group layout"
        if errors:
            raise ConfigError(errors)
        return self

    # serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["energy"] = dataclasses.asdict(self.energy)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise ConfigError({k: "unknown configuration key" for k in unknown})
        if "energy" in d and isinstance(d["energy"], dict):
            try:
                d["energy"] = EnergyCoefficients(**d["energy"])
            except (TypeError, ValueError) as exc:
                raise ConfigError({"energy": str(exc)}) from None
        errors = {}
        for k, v in d.items():
            if k == "energy" or v is None:
                continue
            default = known[k].default
            if isinstance(default, bool):
                if not isinstance(v, bool):
                    errors[k] = f"expected a boolean, got {v!r}"
            elif isinstance(default, int):
                if isinstance(v, bool) or not isinstance(v, int):
                    errors[k] = f"expected an integer, got {v!r}"
            elif isinstance(default, float) or default is None:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    errors[k] = f"expected a number, got {v!r}"
                else:
                    d[k] = float(v)
        if errors:
            raise ConfigError(errors)
        return cls(**d)


# --------------------------------------------------------------------------
# Address mapping (Ro-Co-Ra-Ba-Ch, channel in the lowest line-address bits)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DecodedAddress:
    row: int
    column: int
    rank: int
    bank: int
    channel: int
    tag: int
    set: int


class AddressMap:
    """Precomputed shifts and masks for one configuration."""

    ORDER = ("channel", "bank", "rank", "column", "row")

    def __init__(self, cfg: SimConfig):
        widths = cfg.field_widths
        self.shifts = {}
        self.masks = {}
        shift = 0
        for name in self.ORDER:
            self.shifts[name] = shift
            self.masks[name] = (1 << widths[name]) - 1
            shift += widths[name]
        self.set_bits = shift
        self.set_mask = (1 << shift) - 1
        self.tag_bits = cfg.tag_width
        self.address_space = cfg.address_space
        self.ch_mask = self.masks["channel"]
        self.bank_shift = self.shifts["bank"]
        self.bank_mask = self.masks["bank"]

    def decode(self, addr: int) -> DecodedAddress:
        if addr < 0 or addr >= self.address_space:
            raise AddressError(f"address {addr:#x} outside the {self.address_space:#x}-byte space")
        line = addr >> LINE_SHIFT
        f = {n: (line >> self.shifts[n]) & self.masks[n] for n in self.ORDER}
        return DecodedAddress(row=f["row"], column=f["column"], rank=f["rank"], bank=f["bank"],
                              channel=f["channel"], tag=line >> self.set_bits,
                              set=line & self.set_mask)

    def encode(self, d: DecodedAddress) -> int:
        line = d.tag << self.set_bits
        for n in self.ORDER:
            line |= (getattr(d, n) & self.masks[n]) << self.shifts[n]
        return line << LINE_SHIFT

    def line_addr(self, set_index: int, tag: int) -> int:
        return ((tag << self.set_bits) | set_index) << LINE_SHIFT


def decode_address(addr: int, cfg: SimConfig) -> DecodedAddress:
    return AddressMap(cfg).decode(addr)


def encode_address(d: DecodedAddress, cfg: SimConfig) -> int:
    return AddressMap(cfg).encode(d)


def line_align(addr: int) -> int:
    return addr & ~(LINE_BYTES - 1)


# --------------------------------------------------------------------------
# Device commands
# --------------------------------------------------------------------------

class CommandKind(enum.Enum):
    ACT_RD = "ActRd"
    ACT_WR = "ActWr"
    PROBE = "Probe"
    REFRESH = "Refresh"
    FLUSH_DRAIN = "FlushDrain"


@dataclass
class DramCommand:
    kind: CommandKind
    channel: int
    bank: int = 0
    row: int = 0
    column: int = 0
    tag: int = 0
    set: int = 0
    request_id: int = -1
    fill: bool = False  # ActWr that installs a clean line after a read miss
    count: int = 1  # entries for FLUSH_DRAIN
