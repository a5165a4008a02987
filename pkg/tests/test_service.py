"""HTTP service surface: validation, job lifecycle, reports, self-check."""

import time
import warnings

import pytest

with warnings.catch_warnings():
    # this build of starlette warns about its own httpx usage on import
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from helpers import TINY_EXPERIMENT
from pinnlab.service import create_app


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def _wait_done(client, job_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        st = client.get(f"/experiments/{job_id}").json()
        if st["state"] in ("done", "failed"):
            return st
        time.sleep(0.2)
    raise TimeoutError("job did not finish")


def test_health_and_problems(client):
    health = client.get("/health").json()
    assert health["status"] == "ok"
    names = [p["name"] for p in client.get("/problems").json()]
    assert names == ["reaction1d", "wave1d", "convection"]
    conv = client.get("/problems").json()[2]
    assert conv["params"] == {"beta": 50.0}
    assert conv["bc_kind"] == "periodic"


def test_validate_endpoint(client):
    good = client.post("/configs/validate", json={"config_text": TINY_EXPERIMENT}).json()
    assert good["valid"] and good["spec"]["problem"] == "reaction1d"
    bad = client.post("/configs/validate", json={"config_text": "problem: nope\n"}).json()
    assert not bad["valid"]
    assert any("problem" in e for e in bad["errors"])


def test_submit_rejects_bad_config(client):
    resp = client.post("/experiments", json={"config_text": "r0: -3\n"})
    assert resp.status_code == 422


def test_job_lifecycle_and_reports(client, tmp_path):
    resp = client.post(
        "/experiments",
        json={"config_text": TINY_EXPERIMENT, "workers": 1, "output_dir": str(tmp_path)},
    )
    assert resp.status_code == 201
    job_id = resp.json()["job_id"]
    st = _wait_done(client, job_id)
    assert st["state"] == "done"
    assert st["all_ok"] is True
    assert st["total_runs"] == 4
    summary = client.get(f"/experiments/{job_id}/summary").json()["summary"]
    assert {a["arm"] for a in summary["arms"]} == {"point", "region"}
    report = client.get(f"/experiments/{job_id}/report").text
    assert "experiment: tiny" in report
    from_dir = client.get("/reports", params={"dir": str(tmp_path)}).text
    assert from_dir == report


def test_preset_fills_model(client, tmp_path):
    doc = """
problem: convection
problem_overrides: {beta: 1.0}
iterations: 2
eval_every: 2
train_mesh: {n_interior: 4, n_ic: 5, n_bc: 5}
eval_mesh_n: 11
seeds: [0]
arms: [{name: point, objective: {kind: point}}]
"""
    resp = client.post(
        "/experiments",
        json={
            "config_text": doc,
            "preset": "desk",
            "output_dir": str(tmp_path),
            "seeds": [7],
        },
    )
    assert resp.status_code == 201
    st = _wait_done(client, resp.json()["job_id"])
    assert st["state"] == "done"
    import json

    saved = json.loads((tmp_path / "experiment.json").read_text())
    assert saved["model"]["layer_widths"] == [2, 64, 64, 64, 1]
    assert saved["seeds"] == [7]


def test_unknown_job_404(client):
    assert client.get("/experiments/deadbeef").status_code == 404
    assert client.get("/experiments/deadbeef/summary").status_code == 404


def test_summary_conflict_while_running(client, tmp_path):
    doc = TINY_EXPERIMENT.replace("iterations: 8", "iterations: 200")
    resp = client.post(
        "/experiments", json={"config_text": doc, "output_dir": str(tmp_path)}
    )
    job_id = resp.json()["job_id"]
    st = client.get(f"/experiments/{job_id}").json()
    if st["state"] != "done":
        assert client.get(f"/experiments/{job_id}/summary").status_code == 409
    _wait_done(client, job_id)


def test_reports_missing_dir_404(client):
    assert client.get("/reports", params={"dir": "/nonexistent"}).status_code == 404


def test_check_endpoint(client):
    result = client.post("/check").json()
    assert result["passed"] is True
    names = [c["name"] for c in result["checks"]]
    assert "analytic-residual-identity" in names
    assert all(c["passed"] for c in result["checks"])
