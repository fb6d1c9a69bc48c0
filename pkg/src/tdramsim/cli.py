"""Command-line driver: single runs, design comparisons and link-latency sweeps.

    python3 -m tdramsim --preset low-miss --requests 20000 --out results/
    python3 -m tdramsim --device Tdram,CascadeLake --sweep-link-latency --out sweep/
"""
from __future__ import annotations

import argparse
import hashlib
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .backing import LINK_LATENCIES_NS
from .baselines import ALL_KINDS, BaselineKind
from .core import ConfigError, SimConfig
from .metrics import emit, emit_detail, summarize
from .system import simulate
from .timing import TimingViolation
from .workload import PRESETS, format_trace, functional_oracle, gen_synthetic, preset, read_trace

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

SWEEP_DEFAULT = tuple(x for x in LINK_LATENCIES_NS if x)


def load_config(path=None, base: Optional[SimConfig] = None) -> SimConfig:
    """Flat TOML document of ``SimConfig`` fields (energy coefficients in an ``[energy]`` table).

    Keys not given keep the values of ``base`` (the desk-sized default).
    """
    base = base or SimConfig.desk()
    if path is None:
        return base.validate()
    path = Path(path)
    if not path.is_file():
        raise ConfigError({"config": f"no such file: {path}"})
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError({"config": f"{path}: {exc}"}) from None
    merged = base.to_dict()
    energy = doc.pop("energy", None)
    merged.update(doc)
    if energy is not None:
        if not isinstance(energy, dict):
            raise ConfigError({"energy": "expected a table of coefficients"})
        merged["energy"] = {**merged["energy"], **energy}
    return SimConfig.from_dict(merged).validate()


@dataclass
class RunSpec:
    config: Optional[str] = None
    devices: Sequence[BaselineKind] = ALL_KINDS
    trace: Optional[str] = None
    preset: Optional[str] = "low-miss"
    requests: int = 20_000
    seed: int = 0
    out: str = "results"
    strict: bool = True
    probe: bool = True
    link_latencies: Sequence[float] = field(default_factory=list)
    jobs: int = 1
    detail: bool = False

    def validate(self) -> None:
        if self.trace is not None and not Path(self.trace).is_file():
            raise FileNotFoundError(f"trace file not found: {self.trace}")
        if self.trace is None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        if self.requests < 0:
            raise ValueError("--requests must be nonnegative")


def trace_fingerprint(reqs) -> str:
    return hashlib.blake2b(format_trace(reqs).encode(), digest_size=8).hexdigest()


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f"  ({self.detail})" if self.detail else "")


def _run_one(args):
    cfg, kind, reqs, workload, link = args
    try:
        res = simulate(cfg, kind, reqs)
    except TimingViolation as exc:
        return kind, None, str(exc)
    return kind, res, ""


def compare(rows: Sequence[dict], fingerprints: Sequence[str]) -> list:
    """Ordering checks across designs that ran the same trace at one sweep point."""
    if len(set(fingerprints)) > 1:
        raise ValueError("designs were run on different traces; comparison is meaningless")
    by = {r["design"]: r for r in rows}
    out = []

    def order(metric, names, strict=False):
        present = [n for n in names if n in by]
        if len(present) < 2:
            return
        vals = [by[n][metric] for n in present]
        ok = all((a < b) if strict else (a <= b) for a, b in zip(vals, vals[1:]))
        rel = " < " if strict else " <= "
        out.append(Assertion(f"{metric}: {rel.join(present)}", ok,
                             ", ".join(f"{n}={v:g}" for n, v in zip(present, vals))))

    order("bloat", ["Tdram", "CascadeLake", "Alloy"])
    order("tag_check_mean_ns", ["Tdram", "TdramNoProbe", "CascadeLake"])
    order("energy", ["Tdram", "CascadeLake"], strict=True)
    order("read_e2e_mean_ns", ["Tdram", "CascadeLake"])
    return out


def run(spec: RunSpec) -> int:
    """Run every requested design on one trace; returns the process exit status."""
    spec.validate()
    cfg = load_config(spec.config).replace(seed=spec.seed, strict=spec.strict, probing=spec.probe)
    cfg.validate()
    if spec.trace is not None:
        reqs = read_trace(spec.trace, cfg.address_space)
        workload = Path(spec.trace).name
    else:
        reqs = gen_synthetic(preset(spec.preset, cfg, n=spec.requests, seed=spec.seed))
        workload = spec.preset
    fp = trace_fingerprint(reqs)
    oracle = functional_oracle(reqs, cfg)
    links = list(spec.link_latencies) or [cfg.link_latency]
    tasks = [(cfg.replace(link_latency=float(l)), k, reqs, workload, l)
             for l in links for k in spec.devices]
    if spec.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(spec.jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    out = Path(spec.out)
    rows, checks = [], []
    for (tcfg, kind, _, _, link), (_, res, err) in zip(tasks, results):
        tag = f"{kind.value} @ link {link:g} ns"
        if res is None:
            checks.append(Assertion(f"{tag}: strict timing", False, err))
            continue
        match = res.outcomes == oracle.outcomes and res.image == oracle.image
        rows.append(summarize(res, workload, link, tcfg.energy, match))
        checks.append(Assertion(f"{tag}: matches the functional oracle", match))
        v = res.stats["bus_violations"] + res.stats["timing_violations"]
        checks.append(Assertion(f"{tag}: no bus or timing violations", v == 0, f"{v} found"))
        bad = [k for k, ok in res.audit.items() if not ok]
        checks.append(Assertion(f"{tag}: end-of-run audits", not bad, ", ".join(bad)))
        if spec.detail:
            emit_detail(res.records, out / f"detail_{kind.value}_link{link:g}.csv")
    for link in links:
        point = [r for r in rows if r["link_latency_ns"] == round(float(link), 6)]
        for a in compare(point, [fp] * len(point)):
            a.name = f"link {link:g} ns: {a.name}"
            checks.append(a)

    emit(rows, "csv", out / "report.csv")
    emit(rows, "json", out / "report.json")
    text = "".join(a.line() + "\n" for a in checks)
    (out / "assertions.txt").write_text(f"trace {workload} fingerprint {fp}\n" + text)
    sys.stdout.write(text)
    return 0 if all(a.passed for a in checks) else 1


def _devices(text: str):
    if text.lower() == "all":
        return ALL_KINDS
    return tuple(BaselineKind.parse(x.strip()) for x in text.split(",") if x.strip())


def _latencies(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdramsim", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="TOML file of configuration overrides")
    p.add_argument("--device", default="all",
                   help="comma-separated designs: " + ", ".join(k.value for k in ALL_KINDS) + " or all")
    p.add_argument("--trace", help="trace file (plain or gzip)")
    p.add_argument("--preset", default="low-miss", choices=PRESETS, help="synthetic workload preset")
    p.add_argument("--requests", type=int, default=20_000, help="length of a synthetic trace")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--strict", dest="strict", action="store_true", default=True,
                   help="raise on any bus overlap or timing violation (default)")
    p.add_argument("--no-strict", dest="strict", action="store_false",
                   help="count violations instead of stopping")
    p.add_argument("--sweep-link-latency", nargs="?", const=",".join(map(str, SWEEP_DEFAULT)),
                   metavar="NS[,NS...]",
                   help="main-memory link latencies to sweep (default 50,100,250,500)")
    p.add_argument("--probe", choices=("on", "off"), default="on", help="early tag probing for Tdram")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    p.add_argument("--detail", action="store_true", help="also write per-demand CSV files")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = RunSpec(config=args.config, devices=_devices(args.device), trace=args.trace,
                       preset=args.preset, requests=args.requests, seed=args.seed, out=args.out,
                       strict=args.strict, probe=args.probe == "on",
                       link_latencies=_latencies(args.sweep_link_latency or ""), jobs=args.jobs,
                       detail=args.detail)
        return run(spec)
    except ConfigError as exc:
        for k, msg in exc.errors.items():
            print(f"config error: {k}: {msg}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
