import json
import subprocess
import sys
from pathlib import Path

import pytest

from gmlkit.cli import main

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_run_completed_json(capsys):
    code, out, _ = run(capsys, "run", SCENARIOS / "witness.toml")
    assert code == 0 and json.loads(out)["verdict"]["status"] == "COMPLETED"


def test_run_terminated_exit_code(capsys, tmp_path):
    target = tmp_path / "toy.csv"
    code, _, _ = run(capsys, "run", SCENARIOS / "toy_regression.toml", "--format", "csv", "--out", target)
    assert code == 2
    assert target.read_text().splitlines()[0] == "t,regime,W,cost,admissible"


def test_run_invalid_scenario(capsys):
    code, _, err = run(capsys, "run", SCENARIOS / "no_protected_core.toml")
    assert code == 1 and "protected core" in err


def test_missing_file_is_an_error(capsys, tmp_path):
    code, _, err = run(capsys, "run", tmp_path / "nope.toml")
    assert code == 1 and err


def test_verify_bound_json_and_csv(capsys, tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"w_values": [4.0, 2.0, 1.0], "costs": [0.0, 0.0]}))
    code, out, _ = run(capsys, "verify-bound", good, "--alpha", "0.5")
    assert code == 0 and json.loads(out)["ok"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"w_values": [4.0, 3.0], "costs": [0.0]}))
    code, out, _ = run(capsys, "verify-bound", bad, "--alpha", "0.5")
    assert code == 2 and json.loads(out)["violations"] == [1]
    csv_path = tmp_path / "w.csv"
    run(capsys, "run", SCENARIOS / "witness.toml", "--format", "csv", "--out", csv_path)
    code, _, _ = run(capsys, "verify-bound", csv_path, "--alpha", "0.25", "--beta", "1")
    assert code == 0


def test_entail(capsys, tmp_path):
    theory = tmp_path / "t.txt"
    theory.write_text("-> a\na -> b\n")
    code, out, _ = run(capsys, "entail", theory, "--goal", "a b")
    assert code == 0 and json.loads(out)["least_model"] == ["a", "b"]
    code, _, _ = run(capsys, "entail", theory, "--goal", "c")
    assert code == 2
    code, _, err = run(capsys, "entail", theory)
    assert code == 1 and "goal" in err


def test_collapse(capsys):
    code, out, _ = run(capsys, "collapse", SCENARIOS / "witness.toml")
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] in ("FAITHFUL", "LOSSY")
    assert len(doc["degeneration_conditions"]) == 6 and len(doc["reducibility_conditions"]) == 5


def test_witness_builtin(capsys):
    code, out, _ = run(capsys, "witness", "--alpha", "0.5", "--anchors", "0,0;3,0", "--steps", "100")
    doc = json.loads(out)
    assert code == 0 and doc["report"]["violations"] == []
    assert doc["drift_params"]["alpha"] == pytest.approx(0.25)
    assert len(doc["trajectory"]["w_values"]) == 101


def test_pac(capsys):
    code, out, _ = run(capsys, "pac", "--deltas", "0.01,0.02")
    doc = json.loads(out)
    assert code == 0 and doc["union_bound"] == pytest.approx(0.97)
    code, _, _ = run(capsys, "pac", "--deltas", "0.5,1.5")
    assert code == 1


def test_batch(capsys, tmp_path):
    code, out, _ = run(capsys, "batch", SCENARIOS / "witness.toml", SCENARIOS / "toy_regression.toml", "--out-dir", tmp_path, "--jobs", "2")
    assert code == 2
    assert (tmp_path / "witness.json").exists() and (tmp_path / "toy_regression.json").exists()


def test_module_entry_point_is_deterministic():
    cmd = [sys.executable, "-m", "gmlkit", "run", str(SCENARIOS / "witness.toml")]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"{")
