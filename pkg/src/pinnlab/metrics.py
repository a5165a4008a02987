"""Relative error metrics and the per-run metrics report."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateReferenceError
from .models import forward_values
from .problems import CollocationSet, PdeProblem


@dataclass(frozen=True)
class MetricsReport:
    train_loss: float
    rmae: float
    rmse: float
    loss_eq: float
    loss_ic: float
    loss_bc: float


def relative_errors(pred, truth):
    """(rMAE, rMSE) with the outer square root on both ratios."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    denom_l1 = np.sum(np.abs(truth))
    denom_l2 = np.sum(truth * truth)
    if denom_l1 == 0.0 or denom_l2 == 0.0:
        raise DegenerateReferenceError("reference solution sums to zero on this mesh")
    rmae = np.sqrt(np.sum(np.abs(pred - truth)) / denom_l1)
    rmse = np.sqrt(np.sum((pred - truth) ** 2) / denom_l2)
    return float(rmae), float(rmse)


def prediction_errors(problem: PdeProblem, config, params, mesh: CollocationSet):
    """(rMAE, rMSE) of the model against the analytic solution on mesh.interior."""
    pts = mesh.interior
    pred = forward_values(config, params, pts)
    truth = problem.analytic(pts[:, 0], pts[:, 1])
    return relative_errors(pred, truth)


def evaluate_metrics(problem: PdeProblem, config, params, mesh: CollocationSet) -> MetricsReport:
    """Full report on a mesh: relative errors plus the canonical loss terms."""
    from .objectives import point_loss  # late import; objectives builds on problems

    if mesh.interior.size == 0:
        raise DegenerateReferenceError("empty evaluation mesh")
    rmae, rmse = prediction_errors(problem, config, params, mesh)
    build = point_loss(problem, config, params, mesh, None)
    return MetricsReport(
        train_loss=float(build.tape.value(build.node)),
        rmae=rmae,
        rmse=rmse,
        loss_eq=build.parts["eq"],
        loss_ic=build.parts["ic"],
        loss_bc=build.parts["bc"],
    )
