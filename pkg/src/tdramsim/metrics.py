"""Per-demand statistics, bandwidth bloat, energy, outcome breakdowns and reports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import AccessOutcome, EnergyCoefficients

INF_BLOAT = math.inf


@dataclass(slots=True)
class StatsRecord:
    id: int
    kind: str  # "R" or "W"
    addr: int
    outcome: Optional[AccessOutcome]
    tag_check_latency: float  # ns, from enqueue to the tag result
    queueing_delay: float  # ns, from enqueue until the demand leaves the read/write queue
    end_to_end: float  # ns, from arrival to response (reads) or write commit (writes)
    bytes_moved: int
    bytes_useful: int
    forwarded: bool = False
    probe_conflict: bool = False

    def __post_init__(self):
        if self.bytes_useful > self.bytes_moved:
            raise ValueError(f"request {self.id}: useful bytes exceed moved bytes")


@dataclass(frozen=True)
class EventCounts:
    activates: int = 0
    columns: int = 0
    dq_bytes: int = 0
    hm_beats: int = 0
    tag_accesses: int = 0
    sim_time_ns: float = 0.0


@dataclass(frozen=True)
class EnergyBreakdown:
    activate: float
    column: float
    dq: float
    hm: float
    tag: float
    background: float

    @property
    def total(self) -> float:
        return self.activate + self.column + self.dq + self.hm + self.tag + self.background


def bloat_factor(records: Iterable[StatsRecord]) -> float:
    """Total bytes moved over useful bytes; 1.0 for an empty run."""
    moved = useful = 0
    for r in records:
        moved += r.bytes_moved
        useful += r.bytes_useful
    return bloat_from_bytes(moved, useful)


def bloat_from_bytes(moved: int, useful: int) -> float:
    if useful == 0:
        return 1.0 if moved == 0 else INF_BLOAT
    return moved / useful


def energy(counts: EventCounts, coeffs: EnergyCoefficients = EnergyCoefficients()) -> EnergyBreakdown:
    """Linear event energy plus background power over the simulated time (relative units)."""
    return EnergyBreakdown(
        activate=counts.activates * coeffs.activate,
        column=counts.columns * coeffs.column,
        dq=counts.dq_bytes * coeffs.dq_byte,
        hm=counts.hm_beats * coeffs.hm_beat,
        tag=counts.tag_accesses * coeffs.tag_mat,
        background=counts.sim_time_ns * coeffs.background_per_ns,
    )


@dataclass(frozen=True)
class Breakdown:
    counts: dict  # AccessOutcome -> count, every outcome present
    total: int

    @property
    def miss_ratio(self) -> float:
        if not self.total:
            return 0.0
        return sum(n for o, n in self.counts.items() if o.is_miss) / self.total

    def fractions(self) -> dict:
        return {o: (n / self.total if self.total else 0.0) for o, n in self.counts.items()}


def breakdown(outcomes: Iterable) -> Breakdown:
    """Histogram over access outcomes; accepts records or bare outcomes."""
    counts = {o: 0 for o in AccessOutcome}
    total = 0
    for x in outcomes:
        o = x.outcome if isinstance(x, StatsRecord) else x
        counts[o] += 1
        total += 1
    return Breakdown(counts, total)


def area_overhead(scale_overhead: float, even_fraction: float, bank_area_fraction: float,
                  routing_adder: float) -> float:
    """Die-area fraction added by tag mats: scaled mat overhead on the banks plus routing."""
    args = dict(scale_overhead=scale_overhead, even_fraction=even_fraction,
                bank_area_fraction=bank_area_fraction, routing_adder=routing_adder)
    bad = [k for k, v in args.items() if not 0.0 <= v <= 1.0]
    if bad:
        raise ValueError(f"inputs must lie in [0, 1]: {', '.join(bad)}")
    return scale_overhead * even_fraction * bank_area_fraction + routing_adder


@dataclass(frozen=True)
class LatencySummary:
    count: int
    mean: float
    p50: float
    p99: float


def latency_summary(values: Sequence[float]) -> LatencySummary:
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        return LatencySummary(0, 0.0, 0.0, 0.0)
    p50, p99 = np.percentile(a, [50, 99])
    return LatencySummary(int(a.size), float(a.mean()), float(p50), float(p99))


# -- reports -------------------------------------------------------------

REPORT_COLUMNS = (
    "workload", "design", "link_latency_ns", "requests", "reads", "writes", "miss_ratio",
    "tag_check_mean_ns", "tag_check_p50_ns", "tag_check_p99_ns",
    "queueing_mean_ns", "read_e2e_mean_ns", "read_e2e_p50_ns", "read_e2e_p99_ns",
    "bytes_moved", "bytes_useful", "bloat", "energy", "energy_dq_share", "sim_time_ns",
    "probes", "probe_conflicts", "forced_drains", "flush_max_occupancy", "flush_mean_occupancy",
    "bus_violations", "timing_violations", "oracle_match",
)


def _r(x: float) -> float:
    return round(float(x), 6)


def summarize(result, workload: str = "", link_latency: float = 0.0,
              coeffs: EnergyCoefficients = EnergyCoefficients(),
              oracle_match: Optional[bool] = None) -> dict:
    """One report row for a finished run."""
    recs = result.records
    reads = [r for r in recs if r.kind == "R"]
    tag = latency_summary([r.tag_check_latency for r in recs])
    e2e = latency_summary([r.end_to_end for r in reads])
    q = latency_summary([r.queueing_delay for r in recs])
    moved = sum(r.bytes_moved for r in recs)
    useful = sum(r.bytes_useful for r in recs)
    e = energy(result.counts, coeffs)
    st = result.stats
    return {
        "workload": workload,
        "design": result.kind.value,
        "link_latency_ns": _r(link_latency),
        "requests": len(recs),
        "reads": len(reads),
        "writes": len(recs) - len(reads),
        "miss_ratio": _r(breakdown(recs).miss_ratio),
        "tag_check_mean_ns": _r(tag.mean),
        "tag_check_p50_ns": _r(tag.p50),
        "tag_check_p99_ns": _r(tag.p99),
        "queueing_mean_ns": _r(q.mean),
        "read_e2e_mean_ns": _r(e2e.mean),
        "read_e2e_p50_ns": _r(e2e.p50),
        "read_e2e_p99_ns": _r(e2e.p99),
        "bytes_moved": moved,
        "bytes_useful": useful,
        "bloat": _r(bloat_from_bytes(moved, useful)),
        "energy": _r(e.total),
        "energy_dq_share": _r(e.dq / e.total if e.total else 0.0),
        "sim_time_ns": _r(st.get("sim_time_ns", 0.0)),
        "probes": st.get("probes", 0),
        "probe_conflicts": st.get("probe_conflicts", 0),
        "forced_drains": st.get("forced_drains", 0),
        "flush_max_occupancy": st.get("flush_max_occupancy", 0),
        "flush_mean_occupancy": _r(st.get("flush_mean_occupancy", 0.0)),
        "bus_violations": st.get("bus_violations", 0),
        "timing_violations": st.get("timing_violations", 0),
        "oracle_match": "" if oracle_match is None else bool(oracle_match),
    }


def render(rows: Sequence[dict], fmt: str) -> str:
    """Serialise report rows; column order is fixed by :data:`REPORT_COLUMNS`."""
    fmt = fmt.lower()
    if fmt == "json":
        ordered = [{k: row[k] for k in REPORT_COLUMNS} for row in rows]
        return json.dumps(ordered, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row[k] for k in REPORT_COLUMNS})
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def emit(rows: Sequence[dict], fmt: str, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(rows, fmt))
    return path


DETAIL_COLUMNS = tuple(f.name for f in fields(StatsRecord))


def emit_detail(records: Sequence[StatsRecord], path) -> Path:
    """Per-demand CSV (one row per request)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DETAIL_COLUMNS)
        for r in records:
            d = asdict(r)
            d["outcome"] = r.outcome.value if r.outcome is not None else ""
            d["addr"] = hex(r.addr)
            w.writerow([d[k] for k in DETAIL_COLUMNS])
    return path
