import json
import subprocess
import sys

import pytest

from tatekit.cli import CONFIG_ENV, run


def report(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_localize_norm_example(capsys):
    code, rep = report(capsys, "localize-norm", "--i", "3", "--j", "5", "--r-log", "1", "--depth", "6")
    assert code == 0
    assert rep["result"]["bounds"]["upper"] == "2/1" and rep["result"]["bounds"]["lower"] == "2/1"


def test_spectral_example(capsys):
    code, rep = report(capsys, "spectral", "--n-max", "1024")
    assert code == 0 and rep["result"]["last"] == "11/1024"


def test_failing_check_exits_3(capsys):
    # X^4 needs T-degree 3; depth 2 leaves the upper bound at 1
    code = run(["localize-norm", "--i", "0", "--j", "4", "--depth", "2"])
    captured = capsys.readouterr()
    assert code == 3
    assert "failed: upper_equals_exact" in captured.err


@pytest.mark.parametrize(
    "argv",
    [
        ["spectral", "--r-log", "0"],
        ["spectral", "--r-log", "abc"],
        ["spectral", "--trunc-x", "0"],
        ["spectral", "--config", "/nonexistent.json"],
        ["uniformity-witness", "--c-log", "1"],
        ["presentation-gap", "--r-log", "-1"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    assert run(argv) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"r_log": "1", "radius": 3}))
    assert run(["presentation-gap", "--config", str(cfg)]) == 2
    assert "radius" in capsys.readouterr().err


def test_flags_override_file_and_env(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"r_log": "2", "seed": 7}))
    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    code, rep = report(capsys, "presentation-gap")
    assert code == 0 and rep["config"]["r_log"] == "2/1" and rep["config"]["seed"] == 7
    assert rep["result"]["rows"][0]["lognorm"] == "2/1"
    code, rep = report(capsys, "presentation-gap", "--r-log", "3/2")
    assert rep["config"]["r_log"] == "3/2" and rep["config"]["seed"] == 7


def test_out_file_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["product-isometry", "--count", "5", "--seed", "3"]
    assert run(argv + ["--out", str(a)]) == 0
    assert run(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "." not in json.dumps(json.loads(a.read_text())["result"][0]).replace("...", "")


def test_module_entry_point_determinism(tmp_path):
    outs = []
    for _ in range(2):
        proc = subprocess.run(
            [sys.executable, "-m", "tatekit", "admissibility-gap", "--targets", "2"],
            capture_output=True,
            check=True,
        )
        outs.append(proc.stdout)
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["passed"] is True


def test_cech_witness_report(capsys):
    code, rep = report(capsys, "cech-witness", "--factors", "8")
    assert code == 0
    names = [c["name"] for c in rep["checks"]]
    assert "identity" in names and "growth_exceeds_2" in names
