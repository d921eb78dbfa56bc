"""Single-writer training queue behind the forecast endpoint.

Handlers never train models: a stale or missing artifact yields a job id
and a 202 while this worker, the only artifact writer, evaluates the
configured families on a holdout split, selects the winner, refits it on
the full history, and fills the forecast cache keyed by the data
fingerprint.  One job per (commodity, mode, fingerprint) at a time;
repeat requests return the existing job.
"""

from __future__ import annotations

import logging
import queue
import threading
import uuid

from ..core import SplitSpec
from ..errors import AgripriceError
from ..ingest import MissingPolicy
from .. import engine as eng

log = logging.getLogger(__name__)

FULL_HORIZON = 52


class TrainingManager:
    def __init__(self, store, artifact_store, families, overrides=None,
                 policy: MissingPolicy | None = None,
                 split: SplitSpec | None = None, full_horizon: int = FULL_HORIZON):
        self.store = store
        self.artifacts = artifact_store
        self.families = tuple(families)
        self.overrides = overrides or {}
        self.policy = policy or MissingPolicy()
        self.split = split or SplitSpec()
        self.full_horizon = full_horizon
        self._queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}
        self._by_key: dict[tuple, str] = {}
        self._worker: threading.Thread | None = None

    def _ensure_worker(self):
        if self._worker is None or not self._worker.is_alive():
            self._worker = threading.Thread(target=self._run, daemon=True,
                                            name="agriprice-trainer")
            self._worker.start()

    def request_train(self, commodity: str, mode: str, fingerprint: str) -> str:
        """Queue a training job unless an identical one is already pending."""
        key = (commodity, mode, fingerprint)
        with self._lock:
            existing = self._by_key.get(key)
            if existing and self._jobs[existing]["status"] in ("queued", "running"):
                return existing
            job_id = uuid.uuid4().hex[:12]
            self._jobs[job_id] = {"status": "queued", "commodity": commodity,
                                  "mode": mode, "error": None}
            self._by_key[key] = job_id
            self._queue.put((job_id, commodity, mode))
        self._ensure_worker()
        return job_id

    def job_status(self, job_id: str) -> dict | None:
        with self._lock:
            job = self._jobs.get(job_id)
            return dict(job) if job else None

    def wait(self, job_id: str, timeout: float = 60.0) -> dict:
        """Poll until the job leaves the queue; used by tests and the CLI."""
        import time

        deadline = time.time() + timeout
        while time.time() < deadline:
            job = self.job_status(job_id)
            if job and job["status"] in ("done", "failed"):
                return job
            time.sleep(0.05)
        raise TimeoutError(f"job {job_id} still running after {timeout}s")

    def _run(self):
        while True:
            job_id, commodity, mode = self._queue.get()
            with self._lock:
                self._jobs[job_id]["status"] = "running"
            try:
                self._train(commodity, mode)
                with self._lock:
                    self._jobs[job_id]["status"] = "done"
            except Exception as exc:  # worker must survive any job failure
                log.exception("training %s/%s failed", commodity, mode)
                with self._lock:
                    self._jobs[job_id]["status"] = "failed"
                    self._jobs[job_id]["error"] = str(exc)

    def _train(self, commodity: str, mode: str):
        frame = self.store.get_frame(commodity)
        fingerprint = eng.frame_fingerprint(frame, commodity)
        clean = eng.preprocess(frame, self.policy)

        scores = {}
        hypers = {}
        for family in self.families:
            if family == "arima" and mode != "univariate":
                continue
            hyper = dict(self.overrides.get(family, {}))
            try:
                spec = eng.ModelSpec(family, mode, hyper)
                _, family_mse = eng.train_and_test(spec, clean, self.split, commodity)
                scores[(family, mode)] = family_mse
                hypers[(family, mode)] = hyper
            except AgripriceError as exc:
                log.warning("%s %s/%s skipped: %s", commodity, family, mode, exc)
        if not scores:
            raise AgripriceError(f"no family could be trained for {commodity}/{mode}")

        family, _ = eng.select_best(scores)
        hyper = hypers[(family, mode)]
        # refit the winner on the full history before serving forecasts
        forecaster = eng.make_forecaster(family, hyper, mode).fit(clean)
        artifact = eng.build_artifact(family, mode, hyper, forecaster.payload(),
                                      fingerprint, commodity)
        artifact_id = self.artifacts.save(artifact)
        self.store.set_winner(commodity, mode, artifact_id, family, fingerprint)
        values = [float(v) for v in forecaster.forecast(self.full_horizon)]
        self.store.put_forecast(commodity, mode, fingerprint, family, values)
