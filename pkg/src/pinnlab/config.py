"""Experiment configuration schema.

A single YAML document describes one experiment: a shared run template
(problem, model, optimizer, meshes, trust-region defaults) plus a list of
arms that vary the objective. Unknown keys are rejected so documents stay
diffable and self-describing. The schema is versioned via ``version``.
"""

from __future__ import annotations

from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError

PROBLEM_NAMES = ("reaction1d", "wave1d", "convection")

# layer widths for the two scales used throughout; first entry is the input
# dimension (x, t), last is the scalar field output
MODEL_PRESETS = {
    "desk": [2, 64, 64, 64, 1],
    "paper": [2, 512, 512, 512, 1],
}


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    arch: Literal["mlp-tanh", "fls"] = "mlp-tanh"
    layer_widths: list[int]
    init_seed: Optional[int] = None  # None: derived from the run seed

    @field_validator("layer_widths")
    @classmethod
    def _check_widths(cls, v):
        # len == 2 is the bare affine map; the oracles lean on it
        if len(v) < 2:
            raise ValueError("need input and output widths")
        if any(w <= 0 for w in v):
            raise ValueError("widths must be positive")
        if v[-1] != 1:
            raise ValueError("output width must be 1 (scalar field)")
        return v


class ObjectiveSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["point", "region", "gpinn"] = "point"
    lambda_eq: float = Field(1.0, ge=0)
    lambda_ic: float = Field(1.0, ge=0)
    lambda_bc: float = Field(1.0, ge=0)
    gpinn_lambda: float = Field(1.0, ge=0)
    region_mode: Literal["one-sided", "centered"] = "one-sided"
    perturb: Literal["all", "interior-only"] = "all"


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["adam", "lbfgs"] = "adam"
    lr: float = Field(1e-3, ge=0)  # 0 freezes the parameters (diagnostics)
    # L-BFGS knobs (ignored by adam)
    memory: int = Field(10, ge=1)
    c1: float = Field(1e-4, gt=0)
    c2: float = Field(0.9, gt=0)
    max_line_search: int = Field(20, ge=1)


class MeshConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_interior: int = Field(51, ge=2)
    n_ic: int = Field(101, ge=2)
    n_bc: int = Field(101, ge=2)


class RunConfig(BaseModel):
    """Fully resolved configuration for one training run."""

    model_config = ConfigDict(extra="forbid")

    problem: Literal["reaction1d", "wave1d", "convection"]
    problem_overrides: dict[str, float] = Field(default_factory=dict)
    model: ModelConfig
    objective: ObjectiveSpec = Field(default_factory=ObjectiveSpec)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    iterations: int = Field(1000, ge=1)
    t0: int = Field(10, ge=1)
    r0: float = Field(1e-4, ge=0)
    sigma0: float = Field(1.0, gt=0)
    width_floor: float = Field(1e-10, gt=0)
    samples_per_region: int = Field(1, ge=1)
    seed: int = 0
    train_mesh: MeshConfig = Field(default_factory=MeshConfig)
    eval_mesh_n: int = Field(101, ge=2)
    eval_every: int = Field(500, ge=1)


class ArmSpec(BaseModel):
    """One experiment arm: an objective plus optional overrides of the template."""

    model_config = ConfigDict(extra="forbid")

    name: str
    objective: ObjectiveSpec = Field(default_factory=ObjectiveSpec)
    iterations: Optional[int] = Field(None, ge=1)
    r0: Optional[float] = Field(None, ge=0)
    t0: Optional[int] = Field(None, ge=1)
    samples_per_region: Optional[int] = Field(None, ge=1)
    optimizer: Optional[OptimizerConfig] = None


def _default_arms():
    return [
        ArmSpec(name="point", objective=ObjectiveSpec(kind="point")),
        ArmSpec(name="region", objective=ObjectiveSpec(kind="region")),
    ]


class ExperimentSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: Literal[1] = 1
    name: str = "experiment"
    problem: Literal["reaction1d", "wave1d", "convection"]
    problem_overrides: dict[str, float] = Field(default_factory=dict)
    model: ModelConfig
    seeds: list[int] = Field(default_factory=lambda: [0])
    arms: list[ArmSpec] = Field(default_factory=_default_arms)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    iterations: int = Field(1000, ge=1)
    t0: int = Field(10, ge=1)
    r0: float = Field(1e-4, ge=0)
    sigma0: float = Field(1.0, gt=0)
    width_floor: float = Field(1e-10, gt=0)
    samples_per_region: int = Field(1, ge=1)
    train_mesh: MeshConfig = Field(default_factory=MeshConfig)
    eval_mesh_n: int = Field(101, ge=2)
    eval_every: int = Field(500, ge=1)
    output_dir: Optional[str] = None
    report_format: Literal["text", "json"] = "text"

    @field_validator("seeds")
    @classmethod
    def _seeds_nonempty(cls, v):
        if not v:
            raise ValueError("seeds must be non-empty")
        return v

    @field_validator("arms")
    @classmethod
    def _arm_names_unique(cls, v):
        names = [a.name for a in v]
        if len(set(names)) != len(names):
            raise ValueError("arm names must be unique")
        if not v:
            raise ValueError("need at least one arm")
        return v


def build_run_config(spec: ExperimentSpec, arm: ArmSpec, seed: int) -> RunConfig:
    """Resolve the template plus one arm and seed into a full RunConfig."""
    return RunConfig(
        problem=spec.problem,
        problem_overrides=dict(spec.problem_overrides),
        model=spec.model,
        objective=arm.objective,
        optimizer=arm.optimizer if arm.optimizer is not None else spec.optimizer,
        iterations=arm.iterations if arm.iterations is not None else spec.iterations,
        t0=arm.t0 if arm.t0 is not None else spec.t0,
        r0=arm.r0 if arm.r0 is not None else spec.r0,
        sigma0=spec.sigma0,
        width_floor=spec.width_floor,
        samples_per_region=(
            arm.samples_per_region
            if arm.samples_per_region is not None
            else spec.samples_per_region
        ),
        seed=seed,
        train_mesh=spec.train_mesh,
        eval_mesh_n=spec.eval_mesh_n,
        eval_every=spec.eval_every,
    )


def _format_validation_error(err: ValidationError) -> str:
    lines = []
    for item in err.errors():
        path = ".".join(str(p) for p in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return "; ".join(lines)


def validate_config(raw: str) -> ExperimentSpec:
    """Parse and validate a YAML experiment document.

    Raises ConfigError with per-field diagnostics; unknown keys are rejected.
    """
    try:
        data = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    try:
        return ExperimentSpec.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from exc


def render_config(spec: ExperimentSpec) -> str:
    """Canonical YAML for a spec; validate_config(render_config(s)) == s."""
    return yaml.safe_dump(
        spec.model_dump(mode="json", exclude_none=True), sort_keys=False
    )
