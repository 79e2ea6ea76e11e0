import csv
import json
from pathlib import Path

import pytest

from exterior_ot.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _summary(out):
    return json.loads((out / "summary.json").read_text())


def _write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def _data_files(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "timing.json"}


def test_solve_writes_summary_and_data(tmp_path):
    out = tmp_path / "solve"
    assert main(["solve", "--config", str(CONFIGS / "ball1d.ini"), "--out", str(out)]) == 0
    summary = _summary(out)
    assert summary["status"] == "ok" and summary["violations"] == []
    assert summary["files"] == ["density.csv", "marginals.csv", "plan.csv"]
    assert abs(summary["results"]["value"] - 2.0) <= 0.1
    assert summary["results"]["gap"] == 0.0
    with open(out / "plan.csv") as fh:
        assert next(csv.reader(fh)) == ["source", "target", "mass", "unit_cost"]
    assert "total" in json.loads((out / "timing.json").read_text())


def test_outputs_are_deterministic(tmp_path):
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["solve", "--config", str(CONFIGS / "ball1d.ini"), "--out", str(out), "--seed", "3"]) == 0
        runs.append(_data_files(out))
    assert runs[0] == runs[1]


def test_dual_task(tmp_path):
    out = tmp_path / "dual"
    assert main(["dual", "--config", str(CONFIGS / "ball2d.ini"), "--out", str(out)]) == 0
    summary = _summary(out)
    assert {"potentials.csv", "profiles.csv"} <= set(summary["files"])
    with open(out / "potentials.csv") as fh:
        assert next(csv.reader(fh))[-3:] == ["phi", "psi", "chi"]


def test_rearr_task(tmp_path):
    cfg = _write(tmp_path, """\
[grid]
shape = 24, 24
spacing = 0.0625
[cost]
kind = power
p = 1
[density]
shape = balls
balls = -0.3, 0.1, 0.25; 0.35, -0.2, 0.2
[task]
name = rearr
""")
    out = tmp_path / "rearr"
    assert main(["rearr", "--config", str(cfg), "--out", str(out)]) == 0
    assert _summary(out)["status"] == "ok"
    with open(out / "profiles.csv") as fh:
        assert next(csv.reader(fh)) == ["radius", "psi_star", "lhs", "rhs"]


def test_oracle_task(tmp_path):
    out = tmp_path / "oracle"
    assert main(["oracle", "--config", str(CONFIGS / "oracle.ini"), "--out", str(out)]) == 0
    data = json.loads((out / "oracle.json").read_text())
    assert data["lp_value_units"] == data["value_units"]
    assert data["monotone_1d"]["value"] == pytest.approx(5 / 12, abs=1e-9)


def test_curve_threads_do_not_change_results(tmp_path):
    cfg = _write(tmp_path, """\
[grid]
dim = 1
spacing = 0.0625
[cost]
kind = power
p = 1
[task]
name = curve
masses = 1, 2, 3
""")
    outs = []
    for threads in ("1", "2"):
        out = tmp_path / f"t{threads}"
        assert main(["curve", "--config", str(cfg), "--out", str(out), "--threads", threads]) == 0
        outs.append(_data_files(out))
    assert outs[0]["curve.csv"] == outs[1]["curve.csv"]


def test_optimize_task(tmp_path):
    cfg = _write(tmp_path, """\
[grid]
dim = 2
spacing = 0.125
[cost]
kind = power
p = 1
[task]
name = optimize
mass = 1.5
init = random
""")
    out = tmp_path / "opt"
    assert main(["optimize", "--config", str(cfg), "--out", str(out)]) == 0
    assert {"density.csv", "trace.csv", "profiles.csv"} <= set(_summary(out)["files"])


def test_infeasible_density_is_an_error(tmp_path):
    cfg = _write(tmp_path, """\
[grid]
shape = 8
spacing = 0.25
[density]
shape = cube
side = 2
[task]
name = solve
""")
    out = tmp_path / "bad"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 1
    summary = _summary(out)
    assert summary["status"] == "error" and "InfeasibleError" in summary["error"]


def test_usage_and_config_errors_exit_2(tmp_path, capsys):
    assert main(["solve"]) == 2
    assert main(["fly", "--config", "x.ini"]) == 2
    bad = _write(tmp_path, "[grid]\nspacing = x\n[task]\nname = solve\n")
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "exp.ini:2:" in capsys.readouterr().err
    assert main(["verify", "--out", str(tmp_path / "v"), "--tolerance", "no_such_check=1"]) == 2


def test_verify_fault_injection(tmp_path):
    out = tmp_path / "verify"
    rc = main(["verify", "--out", str(out), "--level", "quick", "--tolerance", "saturation=1.01"])
    assert rc == 1
    report = json.loads((out / "verify.json").read_text())
    failed = [r["name"] for r in report["properties"] if not r["passed"]]
    assert failed == ["saturation"]
    assert "timing" not in report
