"""In-memory job registry with one worker thread.

Training is CPU-bound and single-threaded by construction, so jobs run
serially; this keeps wall-clock sps numbers honest and two queued runs
deterministic with respect to each other.
"""

from __future__ import annotations

import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional


@dataclass
class Job:
    job_id: str
    kind: str
    state: str = "queued"  # queued -> running -> done | error
    created: float = field(default_factory=time.time)
    started: Optional[float] = None
    finished: Optional[float] = None
    error: Optional[str] = None
    progress: Optional[dict] = None
    result: Optional[dict] = None


class JobRunner:
    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._loop, daemon=True, name="segrl-jobs")
        self._worker.start()

    def submit(self, kind: str, work: Callable[[Job], dict]) -> Job:
        """work(job) runs on the worker thread and returns the result dict.

        It may set job.progress as it goes; everything else is managed here.
        """
        job = Job(job_id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[job.job_id] = job
        self._queue.put((job, work))
        return job

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)

    def list(self) -> list[Job]:
        with self._lock:
            return sorted(self._jobs.values(), key=lambda j: j.created)

    def _loop(self):
        while True:
            job, work = self._queue.get()
            job.state = "running"
            job.started = time.time()
            try:
                job.result = work(job)
                job.state = "done"
            except Exception as e:  # surface the failure on the job record
                job.error = f"{type(e).__name__}: {e}"
                job.state = "error"
            job.finished = time.time()
            self._queue.task_done()
