"""Background jobs for long-running work (training, GSA).

Lifecycle is queued -> running -> done | failed; terminal states are
immutable. Each job runs on a shared worker pool and reports a progress
fraction.
"""
from __future__ import annotations

import itertools
import threading
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

JOB_KINDS = ("train", "evaluate", "gsa", "explain")


@dataclass
class Job:
    job_id: str
    kind: str
    status: str = "queued"
    progress: float = 0.0
    result: dict | None = None
    error: str | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "status": self.status,
            "progress": self.progress,
            "result": self.result,
            "error": self.error,
        }

    def _set_progress(self, fraction: float):
        with self._lock:
            if self.status == "running":
                self.progress = min(1.0, max(0.0, float(fraction)))


class JobRegistry:
    def __init__(self, workers: int = 2):
        self.jobs: dict[str, Job] = {}
        self.lock = threading.Lock()
        self.pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="tabsense-job")
        self._counter = itertools.count(1)

    def submit(self, kind: str, fn) -> Job:
        """Queue ``fn(progress_cb) -> dict`` as a job of the given kind."""
        if kind not in JOB_KINDS:
            raise ValueError(f"unknown job kind {kind!r}")
        with self.lock:
            job = Job(f"j{next(self._counter):05d}", kind)
            self.jobs[job.job_id] = job

        def run():
            with job._lock:
                if job.status != "queued":  # pragma: no cover - defensive
                    return
                job.status = "running"
            try:
                result = fn(job._set_progress)
            except Exception as e:  # noqa: BLE001 - job boundary
                with job._lock:
                    job.status = "failed"
                    job.error = f"{type(e).__name__}: {e}"
                    job.progress = 1.0
                    job.traceback = traceback.format_exc()
                return
            with job._lock:
                job.status = "done"
                job.progress = 1.0
                job.result = result if isinstance(result, dict) else {"value": result}

        self.pool.submit(run)
        return job

    def get(self, job_id: str) -> Job | None:
        return self.jobs.get(job_id)

    def any_active(self, job_ids) -> bool:
        for jid in job_ids:
            job = self.jobs.get(jid)
            if job is not None and job.status in ("queued", "running"):
                return True
        return False

    def shutdown(self):
        self.pool.shutdown(wait=True)
