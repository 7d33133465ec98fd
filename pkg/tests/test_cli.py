import csv
import json
import subprocess
import sys
import time
from pathlib import Path

import pytest

from mixedheat import __version__
from mixedheat.cli import apply_override, load_config, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_classify_json(tmp_path):
    rc = main(["classify", "--config", str(CONFIGS / "classify.json"), "--output", str(tmp_path), "--format", "json"])
    assert rc == 0
    rec = json.loads((tmp_path / "classify.json").read_text())
    assert rec["status"] == "Diverges"
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["tool_version"] == __version__
    assert len(man["config_hash"]) == 64 and man["wall_time"] >= 0


def test_fujita_sweep_flip(tmp_path):
    assert main(["fujita-sweep", "--config", str(CONFIGS / "fujita_sweep.json"), "--output", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "fujita_sweep.csv")))
    verdict = {float(r["p"]): r["status_analytic"] for r in rows}
    assert verdict[2.0] == "Diverges" and verdict[2.1] == "Converges"
    assert all(v == "Diverges" for p, v in verdict.items() if p <= 2.0)
    assert all(v == "Converges" for p, v in verdict.items() if p > 2.0)


def test_missing_field_is_validation_error(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "classify.json").read_text())
    del cfg["sigma"]
    t0 = time.perf_counter()
    rc = main(["classify", "--config", _write(tmp_path, cfg), "--output", str(tmp_path)])
    assert time.perf_counter() - t0 < 0.1
    assert rc == 2
    assert "sigma" in capsys.readouterr().err


def test_invalid_grid_fails_fast_without_allocation(tmp_path):
    cfg = json.loads((CONFIGS / "decay.json").read_text())
    cfg["n"] = 2**40
    t0 = time.perf_counter()
    assert main(["decay", "--config", _write(tmp_path, cfg), "--output", str(tmp_path)]) == 2
    assert time.perf_counter() - t0 < 0.1


def test_unknown_field_and_family(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "classify.json").read_text())
    cfg["bogus"] = 1
    assert main(["classify", "--config", _write(tmp_path, cfg), "--output", str(tmp_path)]) == 2
    assert "bogus" in capsys.readouterr().err
    cfg = json.loads((CONFIGS / "classify.json").read_text())
    cfg["f"]["family"] = "Cubic"
    assert main(["classify", "--config", _write(tmp_path, cfg), "--output", str(tmp_path)]) == 2


def test_numerical_inadmissibility_exit_code(tmp_path, capsys):
    rc = main(["kernel-verify", "--config", str(CONFIGS / "kernel_verify.json"), "--set", "L=20", "--set", "wrap_tol=0.01", "--set", "times=[10.0]", "--output", str(tmp_path)])
    assert rc == 3
    assert "anti-wraparound" in capsys.readouterr().err


def test_overrides():
    cfg = {"f": {"family": "Power", "p": 2.0}, "sigma": 0.5}
    apply_override(cfg, "f.p=3.5")
    apply_override(cfg, "sigma=0.25")
    apply_override(cfg, "u0.kind=gaussian")
    assert cfg == {"f": {"family": "Power", "p": 3.5}, "sigma": 0.25, "u0": {"kind": "gaussian"}}


def test_override_changes_hash(tmp_path):
    a = load_config("classify", str(CONFIGS / "classify.json"), [], str(tmp_path), "csv")
    b = load_config("classify", str(CONFIGS / "classify.json"), ["f.p=3.0"], str(tmp_path), "csv")
    assert a.config_hash != b.config_hash
    assert b.params.f.p == 3.0


def test_csv_output_is_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert main(["fujita-sweep", "--config", str(CONFIGS / "fujita_sweep.json"), "--output", str(tmp_path / sub)]) == 0
    for name in ("fujita_sweep.csv", "fujita_threshold.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_worker_pool_preserves_order(tmp_path, monkeypatch):
    assert main(["fujita-sweep", "--config", str(CONFIGS / "fujita_sweep.json"), "--output", str(tmp_path / "serial")]) == 0
    monkeypatch.setenv("MIXEDHEAT_WORKERS", "2")
    assert main(["fujita-sweep", "--config", str(CONFIGS / "fujita_sweep.json"), "--output", str(tmp_path / "pool")]) == 0
    assert (tmp_path / "serial" / "fujita_sweep.csv").read_bytes() == (tmp_path / "pool" / "fujita_sweep.csv").read_bytes()


@pytest.mark.parametrize("command,config,files", [
    ("kernel-verify", "kernel_verify.json", ["kernel_verify.csv", "kernel_00.csv"]),
    ("evolve", "evolve_blowup.json", ["trace.csv", "trace_meta.json"]),
])
def test_commands_write_their_files(tmp_path, command, config, files):
    assert main([command, "--config", str(CONFIGS / config), "--output", str(tmp_path)]) == 0
    for f in files:
        assert (tmp_path / f).exists()
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == command


def test_evolve_reports_blowup(tmp_path):
    assert main(["evolve", "--config", str(CONFIGS / "evolve_blowup.json"), "--output", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "trace_meta.json").read_text())
    assert meta["status"] == "BlowUp"


def test_help_documents_csv_columns():
    out = subprocess.run([sys.executable, "-m", "mixedheat", "--help"], capture_output=True, text=True, check=True).stdout
    assert "CSV columns" in out and "MIXEDHEAT_WORKERS" in out
