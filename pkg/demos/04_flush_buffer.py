"""
How big does the flush buffer need to be?
=========================================

A write that misses on a dirty line parks the old line in a small
buffer on the device; it leaves through DQ slots nobody else wants
(read misses to clean lines, refresh windows). If the buffer fills the
controller has to send an explicit drain command.

Writebacks from a real LLC mostly hit lines that were just read, so
dirty write misses are rare. Lowering ``write_reuse`` makes them common
and shows where small buffers start to need forced drains.
"""

from tdramsim import AccessOutcome, SimConfig, breakdown, gen_synthetic, preset, simulate

# a quarter-size cache so the scan wraps around it within a short trace
cfg = SimConfig.desk(rows=4)
N = 30_000

for reuse in (0.9, 0.2):
    reqs = gen_synthetic(preset("high-miss", cfg, n=N, seed=1, write_reuse=reuse))
    share = breakdown(simulate(cfg, "Tdram", reqs).outcomes).fractions()[
        AccessOutcome.WRITE_MISS_DIRTY]
    print(f"\nwrite_reuse {reuse}: WriteMissDirty {share:.2%} of demands")
    print(f"{'entries':>8}{'max':>6}{'mean':>8}{'forced':>8}{'slot':>7}{'refresh':>9}")
    for cap in (2, 4, 8, 16, 32):
        st = simulate(cfg.replace(flush_capacity=cap, drain_group=min(4, cap)), "Tdram",
                      reqs).stats
        print(f"{cap:>8}{st['flush_max_occupancy']:>6}{st['flush_mean_occupancy']:>8.2f}"
              f"{st['forced_drains']:>8}{st['drains_ReadMissCleanSlot']:>7}"
              f"{st['drains_Refresh']:>9}")
