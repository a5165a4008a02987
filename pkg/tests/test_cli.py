"""CLI behavior through the in-process service client."""

import pytest
from click.testing import CliRunner

from helpers import TINY_EXPERIMENT
from pinnlab.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def _write_config(tmp_path, text=TINY_EXPERIMENT):
    path = tmp_path / "exp.yaml"
    path.write_text(text)
    return path


def test_validate_ok(runner, tmp_path):
    cfg = _write_config(tmp_path)
    result = runner.invoke(main, ["validate", str(cfg)])
    assert result.exit_code == 0
    assert "config ok" in result.output


def test_validate_bad_config(runner, tmp_path):
    cfg = _write_config(tmp_path, "problem: nope\n")
    result = runner.invoke(main, ["validate", str(cfg)])
    assert result.exit_code == 2
    assert "error:" in result.output


def test_run_and_report(runner, tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "runs"
    result = runner.invoke(
        main,
        ["run", str(cfg), "--out", str(out), "--poll-interval", "0.2"],
    )
    assert result.exit_code == 0, result.output
    assert "experiment: tiny" in result.output
    assert (out / "summary.json").exists()

    report = runner.invoke(main, ["report", str(out)])
    assert report.exit_code == 0
    assert "experiment: tiny" in report.output


def test_run_seed_override(runner, tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "runs"
    result = runner.invoke(
        main,
        [
            "run", str(cfg), "--out", str(out),
            "--seed", "5", "--poll-interval", "0.2",
        ],
    )
    assert result.exit_code == 0, result.output
    assert (out / "point" / "seed5" / "trace.csv").exists()
    assert not (out / "point" / "seed0").exists()


def test_run_rejects_bad_config(runner, tmp_path):
    cfg = _write_config(tmp_path, "problem: reaction1d\n")  # model missing
    result = runner.invoke(main, ["run", str(cfg)])
    assert result.exit_code == 2
    assert "config rejected" in result.output


def test_check_command(runner):
    result = runner.invoke(main, ["check"])
    assert result.exit_code == 0, result.output
    assert "[PASS]" in result.output
    assert "[FAIL]" not in result.output


def test_run_exit_nonzero_on_aborted_runs(runner, tmp_path):
    doc = """
problem: reaction1d
model: {layer_widths: [2, 8, 1]}
iterations: 5
eval_every: 5
train_mesh: {n_interior: 5, n_ic: 7, n_bc: 7}
eval_mesh_n: 11
seeds: [0]
optimizer: {kind: adam, lr: 1.0e308}
arms: [{name: point, objective: {kind: point}}]
"""
    cfg = _write_config(tmp_path, doc)
    result = runner.invoke(
        main, ["run", str(cfg), "--out", str(tmp_path / "o"), "--poll-interval", "0.2"]
    )
    assert result.exit_code == 1
    assert "aborted" in result.output
