"""The training loop: sample, step, record the gradient, recalibrate.

One code path serves all three objective kinds. Pointwise and
derivative-regularized baselines run with width pinned to zero; the region
kind draws a fresh perturbed set each iteration with the current trust
width. Calibration bookkeeping (gradient buffer, sigma) runs for every kind
so traces from different arms are directly comparable; at width zero it has
no effect on the optimization itself.

The recorded gradient g_t is exactly the gradient used for the step at
theta_t (for L-BFGS: the gradient entering the line search), so no extra
backward pass is spent on calibration.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import NumericError
from .metrics import evaluate_metrics, prediction_errors
from .models import forward_values, init_params
from .objectives import loss_on_perturbed, point_loss, gpinn_loss, sample_region
from .optimizers import AdamState, LbfgsState
from .problems import make_problem, uniform_mesh
from .tape import backward
from .trust import TrustRegionState, calibrate

TRACE_COLUMNS = (
    "iter",
    "loss_total",
    "loss_eq",
    "loss_ic",
    "loss_bc",
    "sigma",
    "eff_width",
    "rmae",
    "rmse",
    "wall_ms",
)


@dataclass
class TraceRow:
    iter: int
    loss_total: float
    loss_eq: float
    loss_ic: float
    loss_bc: float
    sigma: float
    eff_width: float
    rmae: float
    rmse: float
    wall_ms: float

    def as_list(self):
        return [getattr(self, c) for c in TRACE_COLUMNS]


@dataclass
class RunResult:
    config: RunConfig
    params: object
    trace: list
    final_rmae: float
    final_rmse: float
    final_loss: float
    aborted: bool = False
    abort_iteration: int = -1
    abort_reason: str = ""
    wall_seconds: float = 0.0

    @property
    def ok(self):
        return not self.aborted


def _fmt(v):
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


def write_trace(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(v) for v in row.as_list()])


def write_predictions(path, problem, model_cfg, params, mesh):
    """Dump (x, t, u_pred, u_true) over the mesh interior as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pts = mesh.interior
    pred = forward_values(model_cfg, params, pts)
    truth = problem.analytic(pts[:, 0], pts[:, 1])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "t", "u_pred", "u_true"])
        for row in zip(pts[:, 0], pts[:, 1], pred, truth):
            writer.writerow([_fmt(v) for v in row])


def write_checkpoint(path, config: RunConfig, params, iteration):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": config.model_dump(mode="json"),
        "iteration": iteration,
        "widths": list(params.widths),
        "values": params.values.tolist(),
    }
    path.write_text(json.dumps(payload))


def _build_loss(kind, problem, model_cfg, params, colloc, spec, psets):
    if kind == "region":
        return loss_on_perturbed(problem, model_cfg, params, psets, spec)
    if kind == "gpinn":
        return gpinn_loss(problem, model_cfg, params, colloc, spec)
    return point_loss(problem, model_cfg, params, colloc, spec)


def train(config: RunConfig, out_dir=None) -> RunResult:
    """Run one configuration to completion; persists trace and checkpoint.

    A non-finite loss or gradient aborts the run, keeping the last good
    parameters and recording the iteration index.
    """
    started = time.perf_counter()
    problem = make_problem(config.problem, **config.problem_overrides)
    colloc = uniform_mesh(
        problem,
        config.train_mesh.n_interior,
        config.train_mesh.n_ic,
        config.train_mesh.n_bc,
    )
    eval_mesh = uniform_mesh(
        problem, config.eval_mesh_n, config.eval_mesh_n, config.eval_mesh_n
    )
    model_cfg = config.model
    init_seed = (
        model_cfg.init_seed if model_cfg.init_seed is not None else config.seed
    )
    params = init_params(model_cfg, seed=init_seed)

    kind = config.objective.kind
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 7]))
    trust = TrustRegionState(
        r0=config.r0 if kind == "region" else 0.0,
        capacity=config.t0,
        width_cap=problem.domain.min_side,
        width_floor=config.width_floor,
        sigma0=config.sigma0,
    )
    if config.optimizer.kind == "adam":
        opt = AdamState(params.n_params)
    else:
        opt = LbfgsState(
            memory=config.optimizer.memory,
            c1=config.optimizer.c1,
            c2=config.optimizer.c2,
            max_line_search=config.optimizer.max_line_search,
        )

    rows = []
    aborted = False
    abort_iteration = -1
    abort_reason = ""

    def abort(iteration, reason):
        nonlocal aborted, abort_iteration, abort_reason
        aborted = True
        abort_iteration = iteration
        abort_reason = reason
        if out_dir is not None:
            write_checkpoint(
                Path(out_dir) / "checkpoint.json", config, params, iteration
            )

    for t in range(config.iterations):
        width = trust.effective_width()
        psets = None
        if kind == "region":
            psets = [
                sample_region(
                    colloc,
                    width,
                    config.objective.region_mode,
                    rng,
                    perturb=config.objective.perturb,
                )
                for _ in range(config.samples_per_region)
            ]
        try:
            build = _build_loss(
                kind, problem, model_cfg, params, colloc, config.objective, psets
            )
            grad = backward(build.tape, build.node)
        except NumericError as exc:
            abort(t, str(exc))
            break
        parts = build.parts

        if isinstance(opt, AdamState):
            try:
                new_values = opt.step(params.values, grad, config.optimizer.lr)
            except NumericError as exc:
                abort(t, str(exc))
                break
        else:
            frozen = psets

            def evaluate(vec):
                trial = params.replace_values(vec)
                b = _build_loss(
                    kind, problem, model_cfg, trial, colloc, config.objective, frozen
                )
                return float(b.tape.value(b.node)), backward(b.tape, b.node)

            try:
                new_values, _, _, _ = opt.step(
                    params.values, parts["total"], grad, evaluate
                )
            except NumericError as exc:
                abort(t, str(exc))
                break
        if not np.all(np.isfinite(new_values)):
            abort(t, "non-finite parameters after step")
            break
        params = params.replace_values(new_values)

        calibrate(trust, grad)

        if (t + 1) % config.eval_every == 0 or t == config.iterations - 1:
            rmae, rmse = prediction_errors(problem, model_cfg, params, eval_mesh)
            rows.append(
                TraceRow(
                    iter=t,
                    loss_total=parts["total"],
                    loss_eq=parts["eq"],
                    loss_ic=parts["ic"],
                    loss_bc=parts["bc"],
                    sigma=trust.sigma,
                    eff_width=width,
                    rmae=rmae,
                    rmse=rmse,
                    wall_ms=(time.perf_counter() - started) * 1e3,
                )
            )

    if aborted:
        final_rmae = final_rmse = float("nan")
        final_loss = float("nan")
    else:
        final_rmae, final_rmse = rows[-1].rmae, rows[-1].rmse
        final_loss = rows[-1].loss_total

    if out_dir is not None:
        out = Path(out_dir)
        write_trace(out / "trace.csv", rows)
        write_checkpoint(
            out / "checkpoint.json",
            config,
            params,
            abort_iteration if aborted else config.iterations,
        )
        summary = {
            "aborted": aborted,
            "abort_iteration": abort_iteration,
            "abort_reason": abort_reason,
            "final_rmae": final_rmae,
            "final_rmse": final_rmse,
            "final_loss": final_loss,
        }
        (out / "run.json").write_text(json.dumps(summary, indent=2))
        if not aborted:
            write_predictions(out / "predictions.csv", problem, model_cfg, params, eval_mesh)
            report = evaluate_metrics(problem, model_cfg, params, eval_mesh)
            (out / "metrics.json").write_text(json.dumps(report.__dict__, indent=2))

    return RunResult(
        config=config,
        params=params,
        trace=rows,
        final_rmae=final_rmae,
        final_rmse=final_rmse,
        final_loss=final_loss,
        aborted=aborted,
        abort_iteration=abort_iteration,
        abort_reason=abort_reason,
        wall_seconds=time.perf_counter() - started,
    )
