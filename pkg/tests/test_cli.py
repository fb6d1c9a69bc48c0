import csv
import json
import subprocess
import sys

import pytest

from tdramsim import ConfigError, gen_synthetic, preset, write_trace
from tdramsim.cli import RunSpec, compare, load_config, main, run, trace_fingerprint

N = "1500"


def rows_of(out):
    with open(out / "report.csv") as fh:
        return list(csv.DictReader(fh))


def test_load_config_merges_toml(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("link_latency = 100\nflush_capacity = 32\n[energy]\nactivate = 1.0\n")
    cfg = load_config(p)
    assert cfg.link_latency == 100.0 and cfg.flush_capacity == 32
    assert cfg.energy.activate == 1.0 and cfg.energy.dq_byte > 0
    assert cfg.rows == 16  # untouched keys keep the desk defaults


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    p = tmp_path / "bad.toml"
    p.write_text("nonsense = 1\n")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert "nonsense" in exc.value.errors
    p.write_text("this is not toml")
    with pytest.raises(ConfigError):
        load_config(p)


def test_hiding_violation_is_reported(tmp_path, capsys):
    p = tmp_path / "c.toml"
    p.write_text("tRCD_TAG = 8.0\ntHM_int = 4.5\n")
    assert main(["--config", str(p), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "config error: tRCD_TAG" in err and "hiding condition" in err


def test_missing_trace_is_clean_error(tmp_path, capsys):
    assert main(["--trace", str(tmp_path / "nope.trace"), "--out", str(tmp_path)]) == 2
    assert "trace file not found" in capsys.readouterr().err


def test_default_run_reports_all_designs(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["--requests", N, "--out", str(out)]) == 0
    rows = rows_of(out)
    assert [r["design"] for r in rows] == ["CascadeLake", "Alloy", "Ideal", "TdramNoProbe", "Tdram"]
    assert all(r["oracle_match"] == "True" for r in rows)
    assert json.loads((out / "report.json").read_text())[0]["requests"] == 1500
    text = (out / "assertions.txt").read_text()
    assert "FAIL" not in text and "bloat: Tdram <= CascadeLake <= Alloy" in text
    assert "PASS" in capsys.readouterr().out


def test_high_miss_orderings_pass(tmp_path):
    out = tmp_path / "o"
    assert main(["--preset", "high-miss", "--requests", N, "--device", "Tdram,CascadeLake",
                 "--out", str(out), "--detail"]) == 0
    assert (out / "detail_Tdram_link0.csv").is_file()


def test_sweep_one_row_per_point(tmp_path):
    out = tmp_path / "o"
    assert main(["--requests", "800", "--device", "Tdram,CascadeLake", "--sweep-link-latency",
                 "--out", str(out)]) == 0
    rows = rows_of(out)
    assert [(r["design"], r["link_latency_ns"]) for r in rows] == [
        (d, l) for l in ("50.0", "100.0", "250.0", "500.0") for d in ("Tdram", "CascadeLake")]


def test_explicit_sweep_points_and_probe_off(tmp_path):
    out = tmp_path / "o"
    assert main(["--requests", "800", "--device", "Tdram", "--probe", "off",
                 "--sweep-link-latency", "0,250", "--out", str(out)]) == 0
    rows = rows_of(out)
    assert [r["link_latency_ns"] for r in rows] == ["0.0", "250.0"]
    assert all(r["probes"] == "0" for r in rows)


def test_trace_file_input(tmp_path):
    from tdramsim import SimConfig
    reqs = gen_synthetic(preset("low-miss", SimConfig.desk(), n=600, seed=5))
    p = write_trace(reqs, tmp_path / "w.trace.gz")
    out = tmp_path / "o"
    assert main(["--trace", str(p), "--device", "Tdram", "--out", str(out)]) == 0
    assert rows_of(out)[0]["workload"] == "w.trace.gz"
    assert f"fingerprint {trace_fingerprint(reqs)}" in (out / "assertions.txt").read_text()


def test_same_design_twice_identical(tmp_path):
    for name in ("a", "b"):
        assert run(RunSpec(requests=800, out=str(tmp_path / name))) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_compare_refuses_mixed_traces():
    with pytest.raises(ValueError, match="different traces"):
        compare([], ["aa", "bb"])


def test_compare_flags_broken_ordering():
    rows = [dict(design="Tdram", bloat=2.0, tag_check_mean_ns=1, energy=1, read_e2e_mean_ns=1),
            dict(design="CascadeLake", bloat=1.5, tag_check_mean_ns=2, energy=2,
                 read_e2e_mean_ns=2)]
    result = {a.name: a.passed for a in compare(rows, ["x", "x"])}
    assert result["bloat: Tdram <= CascadeLake"] is False
    assert result["energy: Tdram < CascadeLake"] is True


def test_bad_arguments(tmp_path, capsys):
    assert main(["--device", "sram", "--out", str(tmp_path)]) == 2
    assert main(["--requests", "-5", "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "tdramsim", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "--sweep-link-latency" in r.stdout
