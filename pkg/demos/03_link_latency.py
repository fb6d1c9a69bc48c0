"""
Slower main memory
==================

Put the backing store further away (a CXL-style link adds latency to
every miss) and watch how read latency grows for TDRAM and for the
tags-in-DRAM baseline. The miss path costs the same link delay in both,
so the gap between them stays roughly constant while the totals climb.
"""

import numpy as np

from tdramsim import SimConfig, gen_synthetic, preset, simulate

cfg = SimConfig.desk()
reqs = gen_synthetic(preset("low-miss", cfg, n=10_000, seed=2))

print(f"{'link ns':>8}{'Tdram':>10}{'Cascade':>10}{'gap':>8}")
for link in (0, 50, 100, 250, 500):
    c = cfg.replace(link_latency=float(link))
    e2e = {}
    for kind in ("Tdram", "CascadeLake"):
        res = simulate(c, kind, reqs)
        e2e[kind] = np.mean([r.end_to_end for r in res.records if r.kind == "R"])
    print(f"{link:>8}{e2e['Tdram']:>10.1f}{e2e['CascadeLake']:>10.1f}"
          f"{e2e['CascadeLake'] - e2e['Tdram']:>8.1f}")
