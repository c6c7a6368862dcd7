"""Command-line behavior, exit codes, and report layout."""

import json
import subprocess
import sys

import pytest
import yaml

from contactmech import read_trajectory_csv
from contactmech.cli import main

SHIPPED_SPEC = "specs/gravity_friction.yaml"


@pytest.fixture()
def gravity_spec(tmp_path):
    path = tmp_path / "gravity.yaml"
    assert main(["export-model", "gravity_friction", "--out", str(path)]) == 0
    return path


@pytest.fixture()
def bare_spec(tmp_path):
    # No initial_state and no candidates: usable by neither command.
    path = tmp_path / "bare.yaml"
    path.write_text(
        "n: 1\n"
        "coordinates: [q]\n"
        "hamiltonian: p_q^2/(2*m) + gamma*s\n"
        "parameters: {m: 1.0, gamma: 0.5}\n"
    )
    return path


def test_list_models(capsys):
    assert main(["list-models"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 3
    assert any(line.startswith("gravity_friction:") for line in out)


def test_export_then_verify_round_trip(tmp_path, capsys):
    for name in ("gravity_friction", "damped_free_particle", "damped_oscillator"):
        spec = tmp_path / f"{name}.yaml"
        report = tmp_path / f"{name}.json"
        assert main(["export-model", name, "--out", str(spec)]) == 0
        assert main(["verify", str(spec), "--report", str(report)]) == 0
        data = json.loads(report.read_text())
        assert data["all_expectations_met"] is True
        assert all(entry["matched"] for entry in data["checks"])
    capsys.readouterr()


def test_export_honors_parameter_overrides(tmp_path):
    spec = tmp_path / "light.yaml"
    rc = main(
        ["export-model", "gravity_friction", "--param", "gamma=0.25",
         "--out", str(spec)]
    )
    assert rc == 0
    data = yaml.safe_load(spec.read_text())
    assert data["parameters"]["gamma"] == 0.25


def test_export_default_output_name(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["export-model", "damped_oscillator"]) == 0
    assert (tmp_path / "damped_oscillator.yaml").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["export-model", "no_such_model"],
        ["export-model", "gravity_friction", "--param", "gamma"],
        ["export-model", "gravity_friction", "--param", "gamma=fast"],
        ["export-model", "gravity_friction", "--param", "tau=1.0"],
    ],
)
def test_export_usage_errors(tmp_path, argv, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_simulate_writes_an_accurate_trajectory(gravity_spec, tmp_path, capsys):
    out = tmp_path / "run.csv"
    assert main(["simulate", str(gravity_spec), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "method: rk4" in text
    assert "decay factor" in text
    assert f"wrote {out}" in text
    traj = read_trajectory_csv(out)
    assert traj.times[-1] == 10.0
    assert traj.column("x")[-1] == pytest.approx(1.986524106001829, abs=1e-8)


def test_simulate_adaptive_method(gravity_spec, tmp_path, capsys):
    out = tmp_path / "run.csv"
    rc = main(
        ["simulate", str(gravity_spec), "--method", "rkf45", "--out", str(out)]
    )
    assert rc == 0
    text = capsys.readouterr().out
    assert "method: rkf45" in text
    assert "rejected" in text


def test_simulate_flags_are_method_specific(gravity_spec, tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    assert main(["simulate", str(gravity_spec), "--tol", "1e-9", "--out", out]) == 2
    rc = main(
        ["simulate", str(gravity_spec), "--method", "rkf45", "--dt", "0.1",
         "--out", out]
    )
    assert rc == 2
    capsys.readouterr()


@pytest.mark.parametrize(
    "extra",
    [
        ["--tf", "0.0"],
        ["--t0", "5.0", "--tf", "1.0"],
        ["--dt", "0.0"],
    ],
)
def test_simulate_window_errors(gravity_spec, tmp_path, extra, capsys):
    out = str(tmp_path / "x.csv")
    assert main(["simulate", str(gravity_spec), "--out", out, *extra]) == 2
    capsys.readouterr()


def test_simulate_requires_an_initial_state(bare_spec, tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    assert main(["simulate", str(bare_spec), "--out", out]) == 2
    assert "initial_state" in capsys.readouterr().err


def test_simulate_zero_hamiltonian_is_steady(tmp_path, capsys):
    spec = tmp_path / "still.yaml"
    spec.write_text(
        "n: 1\n"
        "coordinates: [q]\n"
        "hamiltonian: '0'\n"
        "initial_state: {q: 1.0, p_q: 2.0, s: 3.0}\n"
    )
    out = tmp_path / "still.csv"
    assert main(["simulate", str(spec), "--tf", "1.0", "--out", str(out)]) == 0
    assert "n/a (H(t0) = 0)" in capsys.readouterr().out
    traj = read_trajectory_csv(out)
    assert set(traj.column("q")) == {1.0}
    assert set(traj.column("s")) == {3.0}


def test_verify_shipped_spec(tmp_path, capsys):
    report = tmp_path / "report.json"
    assert main(["verify", SHIPPED_SPEC, "--report", str(report)]) == 0
    text = capsys.readouterr().out
    assert "all 8 expectations met" in text
    assert "MISMATCH" not in text
    data = json.loads(report.read_text())
    assert data["all_expectations_met"] is True
    categories = {entry["category"] for entry in data["checks"]}
    assert categories == {"symmetry", "noether", "quantity", "quotient", "map"}


def test_verify_reports_mismatches(tmp_path, capsys):
    doc = yaml.safe_load(open(SHIPPED_SPEC).read())
    for cand in doc["quantities"]:
        if cand["name"] == "momentum_x":
            cand["expect"] = "conserved"
    tampered = tmp_path / "tampered.yaml"
    tampered.write_text(yaml.safe_dump(doc, sort_keys=False))
    report = tmp_path / "report.json"
    assert main(["verify", str(tampered), "--report", str(report)]) == 4
    text = capsys.readouterr().out
    assert "MISMATCH" in text
    data = json.loads(report.read_text())
    assert data["all_expectations_met"] is False
    bad = [entry for entry in data["checks"] if not entry["matched"]]
    assert [entry["name"] for entry in bad] == ["momentum_x"]


def test_verify_can_reuse_a_trajectory(gravity_spec, tmp_path, capsys):
    csv = tmp_path / "run.csv"
    rc = main(["simulate", str(gravity_spec), "--dt", "1e-2", "--out", str(csv)])
    assert rc == 0
    report = tmp_path / "report.json"
    rc = main(
        ["verify", str(gravity_spec), "--trajectory", str(csv),
         "--report", str(report)]
    )
    assert rc == 0
    data = json.loads(report.read_text())
    assert data["trajectory"]["source"] == str(csv)
    capsys.readouterr()


def test_verify_rejects_a_foreign_trajectory(gravity_spec, tmp_path, capsys):
    other = tmp_path / "fp.yaml"
    assert main(["export-model", "damped_free_particle", "--out", str(other)]) == 0
    csv = tmp_path / "fp.csv"
    assert main(["simulate", str(other), "--dt", "1e-2", "--out", str(csv)]) == 0
    report = str(tmp_path / "report.json")
    rc = main(
        ["verify", str(gravity_spec), "--trajectory", str(csv), "--report", report]
    )
    assert rc == 2
    capsys.readouterr()


def test_verify_requires_candidates(bare_spec, tmp_path, capsys):
    rc = main(
        ["verify", str(bare_spec), "--report", str(tmp_path / "r.json")]
    )
    assert rc == 2
    assert "nothing to verify" in capsys.readouterr().err


@pytest.mark.parametrize(
    "content, fragment",
    [
        ("coordinates: [q\n", "line"),                              # yaml error
        ("n: 1\ncoordinates: [q]\nhamiltonian: 'p_q +'\n", "hamiltonian"),
        ("n: 1\nhamiltonian: p_q\n", "coordinates"),                # missing field
    ],
)
def test_verify_spec_errors(tmp_path, capsys, content, fragment):
    spec = tmp_path / "broken.yaml"
    spec.write_text(content)
    assert main(["verify", str(spec), "--report", str(tmp_path / "r.json")]) == 2
    assert fragment in capsys.readouterr().err


def test_verify_missing_file(tmp_path, capsys):
    rc = main(
        ["verify", str(tmp_path / "absent.yaml"),
         "--report", str(tmp_path / "r.json")]
    )
    assert rc == 2
    capsys.readouterr()


def test_analyze_contact_symmetry(capsys):
    assert main(["analyze", SHIPPED_SPEC, "x_translation"]) == 0
    text = capsys.readouterr().out
    assert "classification: contact symmetry" in text
    assert "generated quantity: p_x" in text
    assert "dissipated" in text
    assert "conserved ratio" in text


def test_analyze_non_symmetry(capsys):
    assert main(["analyze", SHIPPED_SPEC, "s_translation"]) == 0
    text = capsys.readouterr().out
    assert "classification: not a symmetry" in text
    assert "no dissipation guarantee" in text


def test_analyze_unknown_field(capsys):
    assert main(["analyze", SHIPPED_SPEC, "warp"]) == 2
    assert "known:" in capsys.readouterr().err


def test_module_entry_point_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "contactmech", "list-models"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "gravity_friction" in proc.stdout
