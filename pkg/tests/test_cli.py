import csv
import json
import shutil
import subprocess
import sys

import pytest

from dclab.cli import COMMANDS, main


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def _record(out, command):
    return json.loads((out / f"{command}.json").read_text())


@pytest.mark.parametrize("command", [c for c in COMMANDS if c != "verify"])
def test_commands_succeed(tmp_path, command):
    argv = [command, "--J", "4"]
    if command == "semilinear":
        argv += ["--R", "0.2", "--P", "96", "--J", "8"]
    code, out = _run(tmp_path, *argv)
    rec = _record(out, command)
    assert code == 0, rec["error"]
    assert rec["schema"] == "dclab.result/1" and rec["status"] == "ok"
    for name in rec["tables"]:
        with open(out / name) as fh:
            rows = list(csv.reader(fh))
        assert len(rows) >= 2


def test_verify(tmp_path):
    code, out = _run(tmp_path, "verify")
    rec = _record(out, "verify")
    assert code == 0
    assert all(c["ok"] for c in rec["results"]["checks"])


def test_spectrum_table_matches_json(tmp_path):
    code, out = _run(tmp_path, "spectrum", "--J", "3")
    rec = _record(out, "spectrum")
    with open(out / "spectrum.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {int(r["j"]) for r in rows} == set(range(-3, 4))
    assert max(float(r["residual"]) for r in rows) <= 1e-8
    assert rec["config"]["J"] == 3


def test_config_echo_reproduces(tmp_path):
    code, out = _run(tmp_path, "spectrum", "--J", "2", "--c", "0.3*i*exp(2*i*t)")
    first = _record(out, "spectrum")
    cfg = tmp_path / "again.json"
    echo = json.loads((out / "config.json").read_text())
    echo["out"] = str(tmp_path / "again")
    cfg.write_text(json.dumps(echo))
    assert main(["spectrum", "--config", str(cfg)]) == 0
    second = _record(tmp_path / "again", "spectrum")
    first["config"].pop("out"), second["config"].pop("out")
    assert first == second
    assert (out / "spectrum.csv").read_text() == (tmp_path / "again" / "spectrum.csv").read_text()


def test_toml_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('J = 2\na = 2.0\nc = "0.2*i"\n')
    code, out = _run(tmp_path, "spectrum", "--config", str(cfg), "--a", "1.5")
    rec = _record(out, "spectrum")
    assert code == 0 and rec["config"]["a"] == 1.5 and rec["config"]["J"] == 2


@pytest.mark.parametrize("argv", [
    ["spectrum", "--a", "-1"],
    ["spectrum", "--c", "exp(i*t"],
    ["spectrum", "--c", "x+t"],
    ["bogus"],
    ["spectrum", "--J", "notanint"],
])
def test_bad_input_exit_2(tmp_path, argv):
    assert main([*argv, "--out", str(tmp_path / "o")]) == 2


def test_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"J": 2, "nonsense": 1}')
    assert main(["spectrum", "--config", str(cfg)]) == 2
    cfg.write_text('{"J": 2.5}')
    assert main(["spectrum", "--config", str(cfg)]) == 2
    assert main(["spectrum", "--config", str(tmp_path / "missing.json")]) == 2


def test_error_record_written(tmp_path):
    code, out = _run(tmp_path, "spectrum", "--a", "-1")
    rec = _record(out, "spectrum")
    assert rec["exit_code"] == 2 and rec["error"]


def test_coefficient_from_file(tmp_path):
    src = tmp_path / "c.txt"
    src.write_text("0.4*i*exp(i*t)\n")
    code, out = _run(tmp_path, "spectrum", "--J", "2", "--c", f"@{src}")
    assert code == 0


@pytest.mark.skipif(shutil.which("dclab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["dclab", "spectrum", "--J", "1", "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert (tmp_path / "spectrum.json").exists()


def test_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dclab.cli", "normalize", "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
