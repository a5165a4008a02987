"""HTTP front end over the training laboratory.

The service owns experiment execution: clients submit a config document,
poll the job, then fetch the summary or rendered report. The CLI is a thin
client of these endpoints.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import yaml
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from .. import __version__
from ..config import MODEL_PRESETS, validate_config
from ..errors import ConfigError
from ..experiments import render_table, summarize_directory
from ..problems import make_problem
from ..selfcheck import run_all
from .jobs import JobRegistry
from .schemas import (
    CheckItem,
    CheckResponse,
    HealthResponse,
    JobCreated,
    JobStatus,
    ProblemInfo,
    SubmitRequest,
    SummaryResponse,
    ValidateRequest,
    ValidateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="pinnlab", version=__version__)
    registry = JobRegistry()
    app.state.registry = registry

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(version=__version__)

    @app.get("/problems", response_model=list[ProblemInfo])
    def problems():
        out = []
        for name in ("reaction1d", "wave1d", "convection"):
            p = make_problem(name)
            out.append(
                ProblemInfo(
                    name=name,
                    params=p.params,
                    domain=[p.domain.x_lo, p.domain.x_hi, p.domain.t_lo, p.domain.t_hi],
                    bc_kind=p.bc_kind,
                    residual_order=p.residual_order,
                )
            )
        return out

    def _parse(req_text, preset=None, seeds=None):
        try:
            data = yaml.safe_load(req_text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"not valid YAML: {exc}") from exc
        if isinstance(data, dict):
            if preset is not None and "model" not in data:
                data["model"] = {"layer_widths": MODEL_PRESETS[preset]}
            if seeds:
                data["seeds"] = list(seeds)
        return validate_config(yaml.safe_dump(data))

    @app.post("/configs/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest):
        try:
            spec = _parse(req.config_text)
        except ConfigError as exc:
            return ValidateResponse(valid=False, errors=str(exc).split("; "))
        return ValidateResponse(valid=True, spec=spec)

    @app.post("/experiments", response_model=JobCreated, status_code=201)
    def submit(req: SubmitRequest):
        try:
            spec = _parse(req.config_text, preset=req.preset, seeds=req.seeds)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        out_dir = req.output_dir or spec.output_dir
        if out_dir is None:
            out_dir = tempfile.mkdtemp(prefix="pinnlab-")
        job = registry.submit(spec, out_dir, req.workers)
        return JobCreated(job_id=job.job_id)

    def _job_or_404(job_id):
        job = registry.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")
        return job

    @app.get("/experiments/{job_id}", response_model=JobStatus)
    def status(job_id: str):
        job = _job_or_404(job_id)
        return JobStatus(
            job_id=job.job_id,
            state=job.state,
            total_runs=len(job.spec.arms) * len(job.spec.seeds),
            output_dir=job.output_dir,
            error=job.error or None,
            all_ok=None if job.table is None else job.table.all_ok,
        )

    @app.get("/experiments/{job_id}/summary", response_model=SummaryResponse)
    def summary(job_id: str):
        job = _job_or_404(job_id)
        if job.state != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.state}")
        return SummaryResponse(job_id=job.job_id, summary=job.table.as_dict())

    @app.get("/experiments/{job_id}/report", response_class=PlainTextResponse)
    def report(job_id: str):
        job = _job_or_404(job_id)
        if job.state != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.state}")
        return render_table(job.table)

    @app.get("/reports", response_class=PlainTextResponse)
    def report_dir(dir: str):
        path = Path(dir)
        try:
            table = summarize_directory(path)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return render_table(table)

    @app.post("/check", response_model=CheckResponse)
    def check():
        results = run_all()
        return CheckResponse(
            passed=all(r.passed for r in results),
            checks=[CheckItem(**r.as_dict()) for r in results],
        )

    return app
