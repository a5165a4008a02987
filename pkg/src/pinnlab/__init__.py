"""Desk-scale PINN training laboratory.

Core pieces: a reverse-mode tape with forward derivative jets, three
benchmark PDE problems with analytic solutions, pointwise and
region-sampled objectives with trust-region width calibration, Adam and
L-BFGS training loops, and an experiment runner behind an HTTP service.
"""

__version__ = "0.1.0"

from .config import (
    ExperimentSpec,
    ModelConfig,
    ObjectiveSpec,
    OptimizerConfig,
    RunConfig,
    build_run_config,
    render_config,
    validate_config,
)
from .jets import Jet2, jet_compose
from .metrics import MetricsReport, evaluate_metrics, relative_errors
from .models import FlatParams, forward_jet, forward_values, init_params
from .objectives import (
    PerturbedSet,
    gpinn_loss,
    point_loss,
    region_gradient_quadrature,
    region_loss,
    sample_region,
)
from .problems import CollocationSet, DomainBox, PdeProblem, make_problem, uniform_mesh
from .tape import Tape, backward, backward_per_sample
from .training import RunResult, train
from .trust import TrustRegionState, calibrate

__all__ = [
    "__version__",
    "ExperimentSpec",
    "ModelConfig",
    "ObjectiveSpec",
    "OptimizerConfig",
    "RunConfig",
    "build_run_config",
    "render_config",
    "validate_config",
    "Jet2",
    "jet_compose",
    "MetricsReport",
    "evaluate_metrics",
    "relative_errors",
    "FlatParams",
    "forward_jet",
    "forward_values",
    "init_params",
    "PerturbedSet",
    "gpinn_loss",
    "point_loss",
    "region_gradient_quadrature",
    "region_loss",
    "sample_region",
    "CollocationSet",
    "DomainBox",
    "PdeProblem",
    "make_problem",
    "uniform_mesh",
    "Tape",
    "backward",
    "backward_per_sample",
    "RunResult",
    "train",
    "TrustRegionState",
    "calibrate",
]
