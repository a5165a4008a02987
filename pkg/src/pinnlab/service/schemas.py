"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..config import ExperimentSpec


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"
    version: str


class ProblemInfo(BaseModel):
    name: str
    params: dict[str, float]
    domain: list[float]  # x_lo, x_hi, t_lo, t_hi
    bc_kind: str
    residual_order: int


class ValidateRequest(BaseModel):
    config_text: str


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[str] = Field(default_factory=list)
    spec: Optional[ExperimentSpec] = None


class SubmitRequest(BaseModel):
    config_text: str
    workers: int = Field(1, ge=1, le=16)
    output_dir: Optional[str] = None
    preset: Optional[Literal["desk", "paper"]] = None
    seeds: Optional[list[int]] = None


class JobCreated(BaseModel):
    job_id: str


class JobStatus(BaseModel):
    job_id: str
    state: Literal["queued", "running", "done", "failed"]
    total_runs: int
    output_dir: str
    error: Optional[str] = None
    all_ok: Optional[bool] = None


class SummaryResponse(BaseModel):
    job_id: str
    summary: dict


class CheckItem(BaseModel):
    name: str
    passed: bool
    detail: str


class CheckResponse(BaseModel):
    passed: bool
    checks: list[CheckItem]
