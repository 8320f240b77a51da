import json

import numpy as np
import pytest
from click.testing import CliRunner

from seqdesign import (
    CriterionSpec,
    Dataset,
    Domain,
    FitConfig,
    fit,
    grid_candidates,
    latin_hypercube,
    propose,
    quadratic_bowl,
)
from seqdesign.cli import cli
from seqdesign.design import read_points_csv
from seqdesign.emulator import model_from_payload, write_dataset_csv


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, list(args), obj={}, catch_exceptions=False)


def write_quadratic_csv(path, n=8, seed=1):
    domain = Domain.from_bounds([[0.0, 1.0]])
    x = latin_hypercube(n, domain, seed).points
    z = np.array([quadratic_bowl(r) for r in x])
    write_dataset_csv(x, z, path)
    return x, z


def test_design_writes_csv_and_distance(runner, tmp_path):
    out = tmp_path / "design.csv"
    result = invoke(
        runner, "design", "--n", "20", "--bounds", "0.75:0.95,0.2:0.8",
        "--maximin", "--seed", "1", "--restarts", "4", "--out", str(out),
    )
    assert result.exit_code == 0
    assert "min interpoint distance" in result.output
    pts = read_points_csv(out)
    assert pts.shape == (20, 2)
    assert out.read_text().splitlines()[0] == "x1,x2"


def test_design_deterministic_bytes(runner, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["design", "--n", "9", "--bounds", "0:1,0:2", "--seed", "3",
            "--restarts", "3"]
    invoke(runner, *args, "--out", str(a))
    invoke(runner, *args, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_design_rejects_zero_points(runner):
    result = runner.invoke(cli, ["design", "--n", "0", "--bounds", "0:1"], obj={})
    assert result.exit_code == 2


def test_design_rejects_bad_bounds(runner, tmp_path):
    result = runner.invoke(
        cli, ["design", "--n", "5", "--bounds", "1:0", "--out", str(tmp_path / "d.csv")],
        obj={},
    )
    assert result.exit_code == 2
    assert "error" in result.output or "error" in (result.stderr or "")


def test_fit_writes_model_within_bounds(runner, tmp_path):
    data_csv = tmp_path / "runs.csv"
    write_quadratic_csv(data_csv)
    out = tmp_path / "model.json"
    result = invoke(
        runner, "fit", "--data", str(data_csv), "--bounds", "0:1",
        "--seed", "2", "--out", str(out),
    )
    assert result.exit_code == 0
    assert "LOO residuals" in result.output
    payload = json.loads(out.read_text())
    assert all(1e-6 <= t <= 1e3 for t in payload["theta"])
    assert all(1.0 <= p <= 2.0 for p in payload["p"])
    model_from_payload(payload)  # loadable


def test_fit_select_transform_reports_choice(runner, tmp_path):
    domain = Domain.from_bounds([[0.0, 1.0]])
    x = latin_hypercube(12, domain, seed=4).points
    g = 1.6 + 1.2 * np.sin(2 * np.pi * 1.1 * x.ravel() + 1.0)
    data_csv = tmp_path / "runs.csv"
    write_dataset_csv(x, g**2, data_csv)
    result = invoke(
        runner, "fit", "--data", str(data_csv), "--bounds", "0:1",
        "--select-transform", "--n-starts", "5", "--out", str(tmp_path / "m.json"),
    )
    assert result.exit_code == 0
    assert "transformation: sqrt" in result.output


def test_fit_missing_file_exit_2(runner, tmp_path):
    result = runner.invoke(
        cli, ["fit", "--data", str(tmp_path / "nope.csv")], obj={}
    )
    assert result.exit_code == 2


def test_propose_matches_library_byte_for_byte(runner, tmp_path):
    data_csv = tmp_path / "runs.csv"
    x, z = write_quadratic_csv(data_csv)
    model_json = tmp_path / "model.json"
    invoke(runner, "fit", "--data", str(data_csv), "--bounds", "0:1",
           "--seed", "0", "--out", str(model_json))
    out = tmp_path / "proposal.json"
    surface = tmp_path / "surface.csv"
    result = invoke(
        runner, "propose", "--model", str(model_json), "--criterion", "minimize",
        "--grid", "41", "--surface", str(surface), "--out", str(out),
    )
    assert result.exit_code == 0

    model = model_from_payload(json.loads(model_json.read_text()))
    candidates = grid_candidates(model.dataset.domain, (41,))
    expected = propose(
        model, CriterionSpec("minimize"), float(model.dataset.y.min()), candidates
    )
    payload = json.loads(out.read_text())
    assert payload["x_new"] == [float(v) for v in expected.x_new]
    assert payload["ei_value"] == expected.ei_value
    assert payload["index"] == expected.index

    lines = surface.read_text().splitlines()
    assert lines[0] == "x1,yhat,s,ei"
    assert len(lines) == 42  # header + one row per candidate


@pytest.mark.filterwarnings("ignore:only 2 runs")
def test_propose_all_training_candidates_reports_zero(runner, tmp_path):
    domain = Domain.from_bounds([[0.0, 1.0]])
    x = np.array([[0.0], [1.0]])
    write_dataset_csv(x, np.array([1.0, 2.0]), tmp_path / "runs.csv")
    invoke(runner, "fit", "--data", str(tmp_path / "runs.csv"), "--bounds", "0:1",
           "--nugget", "0.0", "--n-starts", "2", "--out", str(tmp_path / "m.json"))
    cand_csv = tmp_path / "cands.csv"
    from seqdesign.design import write_points_csv

    write_points_csv(x, cand_csv)
    result = invoke(
        runner, "propose", "--model", str(tmp_path / "m.json"),
        "--candidates", str(cand_csv), "--out", str(tmp_path / "p.json"),
    )
    assert result.exit_code == 0
    payload = json.loads((tmp_path / "p.json").read_text())
    assert payload["ei_value"] <= 1e-12


def test_propose_needs_exactly_one_candidate_source(runner, tmp_path):
    data_csv = tmp_path / "runs.csv"
    write_quadratic_csv(data_csv)
    invoke(runner, "fit", "--data", str(data_csv), "--bounds", "0:1",
           "--out", str(tmp_path / "m.json"))
    result = runner.invoke(
        cli, ["propose", "--model", str(tmp_path / "m.json")], obj={}
    )
    assert result.exit_code == 2


def loop_config(tmp_path, **overrides):
    config = {
        "domain": {"bounds": [[0.0, 1.0]]},
        "simulator": {"kind": "quadratic_bowl"},
        "criterion": {"kind": "minimize"},
        "initial": {"n": 8},
        "candidates": {"grid": [100]},
        "stop": {"threshold": 0.0, "budget": 4},
        "seed": 12,
    }
    config.update(overrides)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config))
    return path


def test_loop_runs_and_reports(runner, tmp_path):
    out = tmp_path / "history.json"
    result = invoke(runner, "loop", "--config", str(loop_config(tmp_path)),
                    "--out", str(out))
    assert result.exit_code == 0
    history = json.loads(out.read_text())
    assert history["best"]["y"] <= 1e-3
    assert "stop reason" in result.output


def test_loop_budget_zero(runner, tmp_path):
    out = tmp_path / "history.json"
    config = loop_config(tmp_path, stop={"threshold": 0.0, "budget": 0})
    result = invoke(runner, "loop", "--config", str(config), "--out", str(out))
    assert result.exit_code == 0
    history = json.loads(out.read_text())
    assert history["runs_added"] == 0
    assert history["stop_reason"] == "budget_exhausted"


def test_loop_byte_identical_histories(runner, tmp_path):
    config = loop_config(tmp_path)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    invoke(runner, "loop", "--config", str(config), "--out", str(a))
    invoke(runner, "loop", "--config", str(config), "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_loop_initial_design_from_file(runner, tmp_path):
    from seqdesign.design import write_points_csv

    pts = latin_hypercube(6, Domain.from_bounds([[0.0, 1.0]]), 5).points
    write_points_csv(pts, tmp_path / "init.csv")
    config = loop_config(tmp_path, initial={"file": "init.csv"},
                         stop={"threshold": 0.0, "budget": 2})
    out = tmp_path / "history.json"
    result = invoke(runner, "loop", "--config", str(config), "--out", str(out))
    assert result.exit_code == 0
    history = json.loads(out.read_text())
    assert np.allclose(history["initial"]["x"], pts)


def test_loop_surfaces_written(runner, tmp_path):
    config = loop_config(tmp_path, stop={"threshold": 0.0, "budget": 2},
                         candidates={"grid": [25]})
    surface_dir = tmp_path / "surfaces"
    result = invoke(runner, "loop", "--config", str(config),
                    "--out", str(tmp_path / "h.json"), "--surface-dir", str(surface_dir))
    assert result.exit_code == 0
    files = sorted(surface_dir.glob("surface_*.csv"))
    history = json.loads((tmp_path / "h.json").read_text())
    assert len(files) == history["runs_added"]
    if files:
        lines = files[0].read_text().splitlines()
        assert lines[0] == "x1,yhat,s,ei"
        assert len(lines) == 26


def test_loop_bad_config_exit_2(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"simulator": {"kind": "quadratic_bowl"}}))
    result = runner.invoke(cli, ["loop", "--config", str(path)], obj={})
    assert result.exit_code == 2


def test_verify_pass_exit_0(runner, tmp_path):
    out = tmp_path / "report.json"
    result = invoke(runner, "verify", "--kind", "minimize", "--trials", "5",
                    "--samples", "50000", "--out", str(out))
    assert result.exit_code == 0
    assert "PASS" in result.output
    report = json.loads(out.read_text())
    assert report["passed"] is True and len(report["trials"]) == 5


def test_verify_contour_pass(runner):
    result = invoke(runner, "verify", "--kind", "contour", "--trials", "5",
                    "--samples", "50000")
    assert result.exit_code == 0


def test_verify_unknown_kind_exit_2(runner):
    result = runner.invoke(cli, ["verify", "--kind", "maximize"], obj={})
    assert result.exit_code == 2


def test_cli_help_lists_commands(runner):
    result = invoke(runner, "--help")
    for command in ("design", "fit", "propose", "loop", "verify", "serve"):
        assert command in result.output
