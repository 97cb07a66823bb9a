"""Command-line interface behavior and exit codes."""

import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from netmix import cli

from conftest import FIG2_PATH, TWOCLUSTERS_PATH


@pytest.fixture()
def runner():
    return CliRunner()


def _run(args):
    return subprocess.run(
        [sys.executable, "-m", "netmix.cli", *args],
        capture_output=True,
        text=True,
    )


def test_categories_command(runner, tmp_path):
    out = tmp_path / "cats.json"
    result = runner.invoke(
        cli.main, ["categories", str(FIG2_PATH), "--json-out", str(out)]
    )
    assert result.exit_code == 0
    doc = json.loads(out.read_text())
    keys = [frozenset(map(tuple, c["overlay_links"])) for c in doc["categories"]]
    assert frozenset({(0, 2), (0, 3), (1, 2)}) in keys
    caps = {k: c["capacity"] for k, c in zip(keys, doc["categories"])}
    assert caps[frozenset({(0, 2), (0, 3), (1, 2)})] == 1.0


def test_design_route_predict_pipeline(runner, tmp_path):
    design_path = tmp_path / "design.json"
    result = runner.invoke(
        cli.main,
        [
            "design", str(FIG2_PATH), "--method", "fmmd-wp", "-T", "8",
            "--output", str(design_path),
        ],
    )
    assert result.exit_code == 0
    doc = json.loads(design_path.read_text())
    assert doc["method"] == "fmmd-wp"
    assert doc["m"] == 4
    assert 0.0 <= doc["rho"] < 1.0

    route_out = tmp_path / "routing.json"
    result = runner.invoke(
        cli.main,
        [
            "route", str(FIG2_PATH), "--design", str(design_path),
            "--solver", "exact", "--output", str(route_out),
        ],
    )
    assert result.exit_code == 0
    routed = json.loads(route_out.read_text())
    assert routed["flows"]

    result = runner.invoke(
        cli.main, ["predict", str(FIG2_PATH), "--design", str(design_path)]
    )
    assert result.exit_code == 0
    pred = json.loads(result.output)
    assert pred["convergent"]
    assert pred["total"] == pytest.approx(pred["tau"] * pred["iterations"])


def test_predict_nonconvergent_exits_4(runner, tmp_path):
    design_path = tmp_path / "design.json"
    design_path.write_text(
        json.dumps({"method": "manual", "m": 4, "alpha": [], "rho": 1.0})
    )
    result = runner.invoke(
        cli.main,
        ["predict", str(FIG2_PATH), "--design", str(design_path)],
        standalone_mode=False,
    )
    assert result.exit_code == cli.EXIT_INFEASIBLE


def test_simulate_command(runner, tmp_path):
    design_path = tmp_path / "design.json"
    runner.invoke(
        cli.main,
        [
            "design", str(FIG2_PATH), "--method", "clique",
            "--output", str(design_path),
        ],
    )
    out = tmp_path / "trace.csv"
    result = runner.invoke(
        cli.main,
        [
            "simulate", str(FIG2_PATH), "--design", str(design_path),
            "--steps", "20", "--output", str(out),
        ],
    )
    assert result.exit_code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "iteration,consensus_distance,mean_distance_to_opt"
    assert len(lines) == 21


def test_experiment_command(runner, tmp_path):
    out = tmp_path / "results.csv"
    result = runner.invoke(
        cli.main,
        [
            "experiment", "--topology", str(TWOCLUSTERS_PATH),
            "--methods", "fmmd,ring", "-T", "24", "--output", str(out),
        ],
    )
    assert result.exit_code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == cli.CSV_HEADER
    assert len(lines) == 3
    assert lines[1].startswith("fmmd,24,")
    # Timing is off by default so the row is fully deterministic.
    assert lines[1].endswith(",0")


def test_run_experiment_rejects_bad_config():
    with pytest.raises(Exception, match="methods"):
        cli.run_experiment({"topology": str(FIG2_PATH), "methods": []})
    with pytest.raises(Exception, match="unknown method"):
        cli.run_experiment({"topology": str(FIG2_PATH), "methods": ["sota"]})


def test_exit_codes_via_subprocess(tmp_path):
    # Unknown option: configuration error.
    r = _run(["experiment", "--topology", str(FIG2_PATH)])
    assert r.returncode == cli.EXIT_CONFIG  # no methods given

    # Missing topology file: input error.
    r = _run(["categories", str(tmp_path / "nope.json")])
    assert r.returncode == cli.EXIT_INPUT

    # Malformed topology: input error.
    bad = tmp_path / "bad.json"
    bad.write_text("{\"nodes\": []}")
    r = _run(["categories", str(bad)])
    assert r.returncode == cli.EXIT_INPUT

    # Bad usage: config error.
    r = _run(["design", str(FIG2_PATH), "--method", "sota"])
    assert r.returncode == cli.EXIT_CONFIG
