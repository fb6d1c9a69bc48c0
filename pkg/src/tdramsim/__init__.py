"""Cycle-level, trace-driven simulator of a TDRAM-based DRAM cache and its baselines."""
from .baselines import ALL_KINDS, BaselineKind, tag_ready_ns, transaction_plan
from .core import (AccessOutcome, AddressMap, ConfigError, EnergyCoefficients, LineState,
                   MemRequest, ReqKind, SimConfig, classify_access, tag_bits)
from .metrics import (StatsRecord, area_overhead, bloat_factor, breakdown, energy, emit,
                      summarize)
from .system import RunResult, SimulationError, simulate
from .workload import (SyntheticParams, functional_oracle, gen_synthetic, parse_trace, preset,
                       read_trace, write_trace)

__version__ = "0.1.0"
