"""HTTP API binding the workbench loop together.

All endpoints live under /api/v1. Responses carry the owning session's
current revision number so the UI can detect stale state. Training runs
asynchronously behind a job id; evaluation is synchronous and, once a best
model is known, automatically enqueues a GSA job for it. Malformed
payloads give 400, unknown ids 404, precondition violations 422, and a
second in-flight mutation 409 (trainings queue by default).
"""
from __future__ import annotations

from pathlib import Path

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .jobs import JobRegistry
from .sessions import BusyError, NotFoundError, Session, SessionError, SessionStore

API_PREFIX = "/api/v1"


class CreateSessionBody(BaseModel):
    seed: int = 0


class DatasetBody(BaseModel):
    csv_text: str
    role: str = "all"


class TrainBody(BaseModel):
    family: str
    hyperparameters: dict | None = None
    seed: int | None = None


class EvaluateBody(BaseModel):
    split: str = "validation"
    loss: str


def create_app(
    data_dir: str | None = None,
    workers: int = 2,
    queue_trainings: bool = True,
    frontend_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="tabsense", docs_url=None, redoc_url=None)
    store = SessionStore(Path(data_dir) if data_dir else None)
    registry = JobRegistry(workers=workers)
    app.state.store = store
    app.state.jobs = registry

    @app.exception_handler(SessionError)
    async def session_error_handler(_req: Request, exc: SessionError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": {"code": exc.http_status, "message": str(exc)}},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": 400, "message": f"malformed payload: {exc.errors()}"}},
        )

    def get_session(session_id: str) -> Session:
        return store.get(session_id)

    # -- sessions ---------------------------------------------------------

    @app.post(API_PREFIX + "/sessions")
    def create_session(body: CreateSessionBody | None = None):
        session = store.create(seed=body.seed if body else 0)
        return {"session_id": session.session_id, "revision": session.revision}

    @app.get(API_PREFIX + "/sessions/{session_id}")
    def session_status(session_id: str):
        return get_session(session_id).status()

    @app.post(API_PREFIX + "/sessions/{session_id}/dataset")
    def upload_dataset(session_id: str, body: DatasetBody):
        session = get_session(session_id)
        with session.mutation():
            return session.upload_dataset(body.csv_text, body.role)

    @app.post(API_PREFIX + "/sessions/{session_id}/features")
    def configure_features(session_id: str, body: dict = Body(...)):
        session = get_session(session_id)
        with session.mutation():
            return session.configure_features(body)

    # -- models -----------------------------------------------------------

    @app.post(API_PREFIX + "/sessions/{session_id}/models/train", status_code=202)
    def train_model(session_id: str, body: TrainBody):
        session = get_session(session_id)
        session.require_prepared()
        active = [e.job_id for e in session.models.values() if e.status == "training"]
        if not queue_trainings and registry.any_active(filter(None, active)):
            raise BusyError("another training is already in flight for this session")
        entry = session.new_model_entry(body.model_dump())

        def work(progress):
            with session.train_queue_lock:  # one training at a time per session
                session.run_training(entry, progress=progress)
            return {"model_id": entry.model_id, "revision": session.revision}

        job = registry.submit("train", work)
        entry.job_id = job.job_id
        return {
            "job_id": job.job_id,
            "model_id": entry.model_id,
            "revision": session.revision,
        }

    @app.get(API_PREFIX + "/sessions/{session_id}/models")
    def list_models(session_id: str):
        session = get_session(session_id)
        return {
            "models": [e.summary() for e in session.models.values()],
            "revision": session.revision,
        }

    @app.post(API_PREFIX + "/sessions/{session_id}/models/file")
    async def upload_model_file(session_id: str, request: Request):
        session = get_session(session_id)
        raw = await request.body()
        if not raw:
            raise SessionError("empty model upload")
        return session.register_model_bytes(raw)

    @app.get(API_PREFIX + "/sessions/{session_id}/models/{model_id}/file")
    def download_model_file(session_id: str, model_id: str):
        session = get_session(session_id)
        entry = session.get_model(model_id)
        if entry.status != "ready" or entry.model is None:
            raise SessionError(f"model {model_id} is not ready")
        from .models import model_to_bytes

        return Response(
            content=model_to_bytes(entry.model),
            media_type="application/octet-stream",
            headers={"Content-Disposition": f'attachment; filename="{model_id}.tsmodel"'},
        )

    # -- evaluation / GSA / explanations -----------------------------------

    @app.post(API_PREFIX + "/sessions/{session_id}/evaluate")
    def evaluate(session_id: str, body: EvaluateBody):
        session = get_session(session_id)
        with session.mutation():
            doc = session.evaluate(body.split, body.loss)

        # the loop's automatic step: GSA of the freshly selected best model
        def work(progress):
            progress(0.0)
            return session.run_gsa_now(split=body.split)

        job = registry.submit("gsa", work)
        with session.lock:
            session.gsa_job_id = job.job_id
        doc["gsa_job_id"] = job.job_id
        return doc

    @app.get(API_PREFIX + "/sessions/{session_id}/gsa")
    def get_gsa(session_id: str):
        session = get_session(session_id)
        if session.latest_gsa is not None:
            doc = session.latest_gsa.to_dict()
            doc["status"] = "done"
            doc["revision"] = session.revision
            return doc
        if session.gsa_job_id is not None:
            job = registry.get(session.gsa_job_id)
            if job is not None and job.status in ("queued", "running"):
                return {
                    "status": job.status,
                    "job_id": job.job_id,
                    "revision": session.revision,
                }
            if job is not None and job.status == "failed":
                raise SessionError(f"GSA failed: {job.error}")
        raise SessionError("no GSA result: run an evaluation first")

    @app.get(API_PREFIX + "/sessions/{session_id}/plot")
    def get_plot(
        session_id: str,
        split: str = Query("validation"),
        output: str = Query(...),
        mode: str = Query("series"),
        sort: str = Query("none"),
        model_id: str | None = Query(None),
    ):
        return get_session(session_id).plot(model_id, split, output, mode, sort)

    @app.post(API_PREFIX + "/sessions/{session_id}/explain")
    def explain(session_id: str, body: dict = Body(...)):
        return get_session(session_id).explain(body)

    # -- jobs ---------------------------------------------------------------

    @app.get(API_PREFIX + "/jobs/{job_id}")
    def get_job(job_id: str):
        job = registry.get(job_id)
        if job is None:
            raise NotFoundError(f"unknown job {job_id!r}")
        return job.to_dict()

    # serve the browser workbench when a build exists
    static_root = Path(frontend_dir) if frontend_dir else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if static_root.is_dir():
        app.mount("/", StaticFiles(directory=str(static_root), html=True), name="ui")

    return app
