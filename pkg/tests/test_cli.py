import csv
import json
import subprocess
import sys

import pytest

from gausscap import cli


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out), "--quiet"])
    return code, out


def load(out, command):
    return json.loads((out / f"{command}.json").read_text())


def test_capacity_of_empty_set(tmp_path):
    code, out = run(tmp_path, "capacity", "--set", 'region={"kind": "empty"}')
    assert code == 0
    rec = load(out, "capacity")
    assert rec["result"]["value"] == 0.0 and rec["status"] == "ok"
    assert (out / "capacity.meta.json").exists()


def test_uniqueness_with_failed_condition(tmp_path):
    code, out = run(tmp_path, "uniqueness", "--set", "m=2", "--set", "p=10")
    assert code == 0
    assert load(out, "uniqueness")["result"]["verdict"] == "generation condition fails"


def test_selftest_is_deterministic(tmp_path):
    c1, a = run(tmp_path, "selftest", "--seed", "3", name="a")
    c2, b = run(tmp_path, "selftest", "--seed", "3", name="b")
    assert c1 == c2 == 0
    assert (a / "selftest.json").read_bytes() == (b / "selftest.json").read_bytes()
    assert load(a, "selftest")["result"]["passed"]


def test_selftest_violation_exit_code(tmp_path, monkeypatch):
    import gausscap.selftest as st

    monkeypatch.setattr(st, "run_selftest", lambda seed: [{"name": "broken", "passed": False}])
    code, out = run(tmp_path, "selftest")
    assert code == cli.EXIT_SELFTEST
    assert load(out, "selftest")["status"] == "invariant_violation"


def test_non_convergence_exit_code(tmp_path, capsys):
    code, out = run(tmp_path, "capacity", "--set", "solver.max_iter=2", "--set", "refine_Q=[]")
    assert code == cli.EXIT_SOLVER
    assert load(out, "capacity")["status"] == "not_converged"
    diag = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert diag["error"] == "not_converged" and diag["exit_code"] == 3


@pytest.mark.parametrize("args", [
    ["capacity", "--set", "colour=1"],
    ["capacity", "--set", "n=2"],
    ["capacity", "--set", "p=1"],
    ["capacity", "--set", "solver.bogus=1"],
    ["hitting", "--set", "replicas=0"],
    ["hausdorff", "--set", "epsilons=[0.1, 0.2]"],
    ["kakutani", "--set", "radii=[]"],
])
def test_validation_errors(tmp_path, capsys, args):
    code, _ = run(tmp_path, *args)
    assert code == cli.EXIT_CONFIG
    diag = json.loads(capsys.readouterr().err.strip())
    assert diag["error"] == "validation" and diag["message"]


def test_bad_config_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _ = run(tmp_path, "capacity", "--config", str(bad))
    assert code == cli.EXIT_CONFIG
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"command": "hitting"}))
    assert run(tmp_path, "capacity", "--config", str(other))[0] == cli.EXIT_CONFIG


def test_thread_env_is_validated(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    assert run(tmp_path, "selftest")[0] == cli.EXIT_CONFIG


def test_flags_override_config_and_round_trip(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 1, "replicas": 300, "upper": 1.0}))
    code, out = run(tmp_path, "hitting", "--config", str(cfg), "--seed", "2")
    assert code == 0
    rec = load(out, "hitting")
    assert rec["config"]["seed"] == 2 and rec["config"]["replicas"] == 300
    assert rec["config"]["spacing"] == 0.25  # default materialized
    code, again = run(tmp_path, "hitting", "--config", str(out / "hitting.config.json"), name="again")
    assert code == 0
    assert (out / "hitting.json").read_bytes() == (again / "hitting.json").read_bytes()
    with open(out / "hitting.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["grid_spacing", "hits", "replicas", "estimate", "ci_low", "ci_high", "seed"]
    assert len(rows) == 4


def test_partial_region_override():
    cfg = cli.materialize("hitting", {}, cli._parse_set(["region.radius=0.5"]))
    assert cfg["region"] == {"kind": "ball", "center": [0.0], "radius": 0.5}
    cfg = cli.materialize("hitting", {"region": {"kind": "point", "center": [1.0]}})
    assert cfg["region"] == {"kind": "point", "center": [1.0]}


def test_threads_do_not_change_results(tmp_path, monkeypatch):
    args = ["truncation-bound", "--set", "n=[1, 2]", "--set", "samples=4"]
    assert run(tmp_path, *args, name="one")[0] == 0
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert run(tmp_path, *args, name="three")[0] == 0
    a = (tmp_path / "one" / "truncation-bound.json").read_bytes()
    b = (tmp_path / "three" / "truncation-bound.json").read_bytes()
    assert a == b


def test_float_format():
    assert cli._format_float(0.1) == "0.10000000000000001"
    assert cli._format_float(2.0) == "2.0"
    assert cli._format_float(float("nan")) == '"nan"'
    assert json.loads(cli.dumps({"x": [1.5, None, True], "y": {}})) == {"x": [1.5, None, True], "y": {}}
    assert float(cli._format_float(1 / 3)) == 1 / 3


def test_remaining_commands_smoke(tmp_path):
    assert run(tmp_path, "hausdorff", "--set", "section_samples=5")[0] == 0
    assert run(tmp_path, "multest", "--set", "samples=5")[0] == 0
    code, out = run(tmp_path, "equivalence", "--set", "n=[1]", "--set", "r=[1]", "--set", "p=[2]",
                    "--set", "K=6", "--set", "Q=8", "--set", "refine_Q=10")
    assert code == 0
    summary = load(out, "equivalence")["result"]["summary"]
    assert set(summary) == {"r=1,p=2"}
    code, out = run(tmp_path, "kakutani", "--set", "replicas=200", "--set", "capacity_Q=[21, 31]")
    assert code == 0
    assert (out / "kakutani.csv").read_text().splitlines()[0].startswith("set_id,rho,")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gausscap", "uniqueness", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "not L^p-unique" in proc.stdout
