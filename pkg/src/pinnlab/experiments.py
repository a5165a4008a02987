"""Experiment orchestration: arms x seeds, summaries, reports.

Every (arm, seed) pair trains through the same loop; artifacts land under
``out_dir/<arm>/seed<k>/``. The summary is recomputable from the artifacts
alone (``summarize_directory``), which is what the report command does.

Runs whose final rMSE exceeds 0.9 on the reaction or convection problems are
flagged: those two benchmarks are the stall-prone regime where pointwise
training tends to flatline near relative error 1.
"""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ExperimentSpec, RunConfig, build_run_config
from .training import train

FAILURE_RMSE = 0.9
FAILURE_PROBLEMS = ("reaction1d", "convection")


@dataclass
class RunRecord:
    arm: str
    seed: int
    ok: bool
    final_loss: float
    final_rmae: float
    final_rmse: float
    failure_mode: bool
    abort_reason: str = ""

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class ArmSummary:
    arm: str
    kind: str
    records: list
    median_loss: float
    median_rmae: float
    median_rmse: float
    mean_rmse: float
    std_rmse: float
    promotion_rmse: float | None = None
    promotion_rmae: float | None = None
    promotion_loss: float | None = None

    def as_dict(self):
        d = dict(self.__dict__)
        d["records"] = [r.as_dict() for r in self.records]
        return d


@dataclass
class SummaryTable:
    name: str
    problem: str
    arms: list
    all_ok: bool
    settings: dict = None

    def as_dict(self):
        return {
            "name": self.name,
            "problem": self.problem,
            "all_ok": self.all_ok,
            "settings": self.settings,
            "arms": [a.as_dict() for a in self.arms],
        }


def _promotion(point_value, arm_value):
    if point_value is None or point_value <= 0:
        return None
    return (point_value - arm_value) / point_value


def _spec_settings(spec):
    """Run settings echoed into the summary for provenance."""
    return {
        "seeds": list(spec.seeds),
        "iterations": spec.iterations,
        "t0": spec.t0,
        "r0": spec.r0,
        "sigma0": spec.sigma0,
        "samples_per_region": spec.samples_per_region,
        "optimizer": spec.optimizer.model_dump(mode="json"),
        "model": spec.model.model_dump(mode="json"),
        "train_mesh": spec.train_mesh.model_dump(mode="json"),
        "eval_mesh_n": spec.eval_mesh_n,
    }


def _summarize(name, problem, arm_kinds, records, settings=None):
    by_arm = {}
    for rec in records:
        by_arm.setdefault(rec.arm, []).append(rec)
    arms = []
    for arm, recs in by_arm.items():
        finished = [r for r in recs if r.ok]
        if finished:
            med_loss = statistics.median(r.final_loss for r in finished)
            med_rmae = statistics.median(r.final_rmae for r in finished)
            med_rmse = statistics.median(r.final_rmse for r in finished)
            mean_rmse = statistics.fmean(r.final_rmse for r in finished)
            std_rmse = (
                statistics.pstdev(r.final_rmse for r in finished)
                if len(finished) > 1
                else 0.0
            )
        else:
            med_loss = med_rmae = med_rmse = mean_rmse = std_rmse = float("nan")
        arms.append(
            ArmSummary(
                arm=arm,
                kind=arm_kinds.get(arm, "?"),
                records=recs,
                median_loss=med_loss,
                median_rmae=med_rmae,
                median_rmse=med_rmse,
                mean_rmse=mean_rmse,
                std_rmse=std_rmse,
            )
        )
    point = next((a for a in arms if a.kind == "point"), None)
    if point is not None:
        for a in arms:
            a.promotion_loss = _promotion(point.median_loss, a.median_loss)
            a.promotion_rmae = _promotion(point.median_rmae, a.median_rmae)
            a.promotion_rmse = _promotion(point.median_rmse, a.median_rmse)
    return SummaryTable(
        name=name,
        problem=problem,
        arms=arms,
        all_ok=all(r.ok for r in records),
        settings=settings,
    )


def _record_from_result(arm, seed, problem, result):
    return RunRecord(
        arm=arm,
        seed=seed,
        ok=result.ok,
        final_loss=result.final_loss,
        final_rmae=result.final_rmae,
        final_rmse=result.final_rmse,
        failure_mode=_is_failure(problem, result.final_rmse),
        abort_reason=result.abort_reason,
    )


def _is_failure(problem, rmse):
    return problem in FAILURE_PROBLEMS and (rmse != rmse or rmse > FAILURE_RMSE)


def _run_one(payload):
    """Worker entry: (arm, seed, run config json, out dir)."""
    arm, seed, config_json, out_dir = payload
    try:
        from threadpoolctl import threadpool_limits

        limiter = threadpool_limits(limits=1)
    except Exception:
        limiter = None
    try:
        config = RunConfig.model_validate_json(config_json)
        result = train(config, out_dir=out_dir)
        return arm, seed, config.problem, {
            "ok": result.ok,
            "final_loss": result.final_loss,
            "final_rmae": result.final_rmae,
            "final_rmse": result.final_rmse,
            "abort_reason": result.abort_reason,
        }
    finally:
        if limiter is not None:
            limiter.unregister()


def run_experiment(spec: ExperimentSpec, out_dir, workers=1) -> SummaryTable:
    """Train every (arm, seed), persist artifacts, return the summary table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "experiment.json").write_text(json.dumps(spec.model_dump(mode="json"), indent=2))

    jobs = []
    for arm in spec.arms:
        for seed in spec.seeds:
            config = build_run_config(spec, arm, seed)
            run_dir = out / arm.name / f"seed{seed}"
            jobs.append(
                (arm.name, seed, config.model_dump_json(), str(run_dir))
            )

    records = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(j) for j in jobs]
    for arm, seed, problem, payload in outcomes:
        records.append(
            RunRecord(
                arm=arm,
                seed=seed,
                ok=payload["ok"],
                final_loss=payload["final_loss"],
                final_rmae=payload["final_rmae"],
                final_rmse=payload["final_rmse"],
                failure_mode=_is_failure(problem, payload["final_rmse"]),
                abort_reason=payload["abort_reason"],
            )
        )

    arm_kinds = {a.name: a.objective.kind for a in spec.arms}
    table = _summarize(spec.name, spec.problem, arm_kinds, records, _spec_settings(spec))
    (out / "summary.json").write_text(json.dumps(table.as_dict(), indent=2))
    (out / "table.txt").write_text(render_table(table))
    return table


def summarize_directory(out_dir) -> SummaryTable:
    """Rebuild the summary from artifacts only (trace CSVs and run.json files)."""
    out = Path(out_dir)
    spec_path = out / "experiment.json"
    if not spec_path.exists():
        raise FileNotFoundError(f"no experiment.json under {out}")
    spec = ExperimentSpec.model_validate(json.loads(spec_path.read_text()))
    records = []
    for arm in spec.arms:
        for seed in spec.seeds:
            run_dir = out / arm.name / f"seed{seed}"
            run_json = run_dir / "run.json"
            if not run_json.exists():
                records.append(
                    RunRecord(arm.name, seed, False, float("nan"), float("nan"),
                              float("nan"), True, "missing artifacts")
                )
                continue
            payload = json.loads(run_json.read_text())
            records.append(
                RunRecord(
                    arm=arm.name,
                    seed=seed,
                    ok=not payload["aborted"],
                    final_loss=payload["final_loss"],
                    final_rmae=payload["final_rmae"],
                    final_rmse=payload["final_rmse"],
                    failure_mode=_is_failure(spec.problem, payload["final_rmse"]),
                    abort_reason=payload.get("abort_reason", ""),
                )
            )
    arm_kinds = {a.name: a.objective.kind for a in spec.arms}
    return _summarize(spec.name, spec.problem, arm_kinds, records, _spec_settings(spec))


def render_table(table: SummaryTable) -> str:
    """Plain-text summary, one arm per row, promotions relative to the point arm."""
    lines = []
    lines.append(f"experiment: {table.name}   problem: {table.problem}")
    header = (
        f"{'arm':<12}{'kind':<8}{'loss(med)':>12}{'rMAE(med)':>12}"
        f"{'rMSE(med)':>12}{'rMSE(std)':>12}{'promo(rMSE)':>12}{'fail':>6}"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for a in table.arms:
        promo = "-" if a.promotion_rmse is None else f"{100 * a.promotion_rmse:.0f}%"
        fails = sum(1 for r in a.records if r.failure_mode)
        lines.append(
            f"{a.arm:<12}{a.kind:<8}{a.median_loss:>12.3e}{a.median_rmae:>12.3f}"
            f"{a.median_rmse:>12.3f}{a.std_rmse:>12.3f}{promo:>12}{fails:>4}/{len(a.records)}"
        )
    if not table.all_ok:
        lines.append("warning: some runs aborted; see run.json files")
    return "\n".join(lines) + "\n"
