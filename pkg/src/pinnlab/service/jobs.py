"""In-memory job registry: one background thread per submitted experiment."""

from __future__ import annotations

import threading
import traceback
import uuid
from dataclasses import dataclass

from ..config import ExperimentSpec
from ..experiments import run_experiment


@dataclass
class Job:
    job_id: str
    spec: ExperimentSpec
    output_dir: str
    workers: int
    state: str = "queued"
    error: str = ""
    table: object = None
    thread: threading.Thread = None


class JobRegistry:
    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, spec: ExperimentSpec, output_dir: str, workers: int) -> Job:
        job = Job(
            job_id=uuid.uuid4().hex[:12],
            spec=spec,
            output_dir=output_dir,
            workers=workers,
        )

        def work():
            job.state = "running"
            try:
                job.table = run_experiment(spec, output_dir, workers=workers)
                job.state = "done"
            except Exception as exc:  # surfaced through the status endpoint
                job.state = "failed"
                job.error = f"{exc}\n{traceback.format_exc()}"

        job.thread = threading.Thread(target=work, daemon=True)
        with self._lock:
            self._jobs[job.job_id] = job
        job.thread.start()
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)
