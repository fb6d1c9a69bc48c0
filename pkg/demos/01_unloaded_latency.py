"""
Unloaded tag checks
===================

One read into an idle cache, once per design. The tag result arrives
after a fixed number of nanoseconds that follows straight from the DRAM
timing parameters, so this is the place to see the designs differ before
any queueing gets involved.
"""

from tdramsim import ALL_KINDS, MemRequest, ReqKind, SimConfig, simulate, tag_ready_ns
from tdramsim import area_overhead, tag_bits
from tdramsim.core import GiB

cfg = SimConfig.desk()
read = [MemRequest(ReqKind.READ, 0x40, 0.0, 0)]

# Tags in on-die mats answer on the HM bus after tRCD_TAG + tHM.
# Tags kept next to the data only show up once the first burst is back.
print(f"{'design':<14}{'formula (ns)':>14}{'simulated (ns)':>16}")
for kind in ALL_KINDS:
    rec = simulate(cfg, kind, read).records[0]
    print(f"{kind.value:<14}{tag_ready_ns(kind, cfg):>14.1f}{rec.tag_check_latency:>16.1f}")

# The tag probe must finish its internal comparison before the data column
# access would start, otherwise it is no longer hidden.
print(f"\ntRCD_TAG + tHM_int = {cfg.tRCD_TAG + cfg.tHM_int:g} ns <= tRCD = {cfg.tRCD:g} ns")

# Static arithmetic: tag width of a 64 GiB cache in front of a 1 PiB space,
# and the die area the tag mats cost.
print("tag bits:", tag_bits(64 * GiB, 1 << 50))
print(f"area without routing: {area_overhead(0.243, 0.5, 0.66, 0.0):.2%}")
print(f"area with routing:    {area_overhead(0.243, 0.5, 0.66, 0.0022):.2%}")
