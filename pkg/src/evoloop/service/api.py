"""HTTP surface over the orchestrator.

Every route translates to a call on the single orchestrator instance; the
server thread is the orchestrator's owner thread, so handlers are
serialized with ticks by the tick lock. Errors always come back as
``{"code", "message"}``. Authentication is a static bearer token taken
from an environment variable; when the variable is unset the API is open
(local development).
"""

from __future__ import annotations

import os
import threading

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from evoloop.agents import Orchestrator, OrchestratorError
from evoloop.configspace import ConfigError

DEFAULT_TOKEN_ENV = "EVOLOOP_API_TOKEN"


class ApiError(Exception):
    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


def trial_summary(trial) -> dict:
    return {
        "id": trial.id,
        "phase": trial.phase,
        "source": trial.manifest.source,
        "persona_kind": trial.manifest.persona_kind,
        "cost_units": trial.cost_units,
        "failure_reason": trial.failure_reason,
    }


def create_app(orch: Orchestrator,
               token_env: str = DEFAULT_TOKEN_ENV) -> FastAPI:
    app = FastAPI(title="evoloop", docs_url=None, redoc_url=None)
    lock = threading.Lock()
    app.state.orchestrator = orch
    app.state.tick_lock = lock

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code,
                                     "message": exc.message})

    def check_auth(request: Request) -> None:
        token = os.environ.get(token_env, "")
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise ApiError("unauthorized", "missing or bad token", 401)

    def get_trial(trial_id: str):
        if trial_id not in orch.trials:
            raise ApiError("not_found", f"unknown trial: {trial_id}", 404)
        return orch.trials[trial_id]

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "tick": orch.tick_count}

    @app.get("/trials")
    async def list_trials(request: Request):
        check_auth(request)
        trials = sorted(orch.trials.values(), key=lambda t: t.id)
        return {"trials": [trial_summary(t) for t in trials],
                "queue": orch.queue}

    @app.get("/trials/{trial_id}")
    async def get_trial_detail(trial_id: str, request: Request):
        check_auth(request)
        return get_trial(trial_id).to_json()

    @app.post("/trials")
    async def submit_trial(request: Request):
        check_auth(request)
        body = await request.json()
        with lock:
            try:
                trial_id = orch.submit(body)
            except (OrchestratorError, ConfigError) as exc:
                raise ApiError("bad_manifest", str(exc), 400)
        return {"trial_id": trial_id, "phase": "PROPOSED"}

    @app.post("/trials/{trial_id}/abort")
    async def abort_trial(trial_id: str, request: Request):
        check_auth(request)
        trial = get_trial(trial_id)
        with lock:
            try:
                orch.abort(trial.id)
            except OrchestratorError as exc:
                raise ApiError("bad_phase", str(exc), 409)
        return trial_summary(trial)

    @app.post("/queue/reorder")
    async def reorder_queue(request: Request):
        check_auth(request)
        body = await request.json()
        order = body.get("order")
        if not isinstance(order, list):
            raise ApiError("bad_request", "body must carry an order list")
        with lock:
            try:
                queue = orch.reorder(order)
            except OrchestratorError as exc:
                raise ApiError("bad_order", str(exc), 409)
        return {"queue": queue}

    @app.get("/journal")
    async def get_journal(request: Request):
        check_auth(request)
        return {"records": [r.to_json() for r in orch.journal.read_all()]}

    @app.post("/steering")
    async def post_steering(request: Request):
        check_auth(request)
        body = await request.json()
        persona = body.get("persona_kind")
        text = body.get("text", "")
        if persona not in ("optimizer", "architecture", "reward"):
            raise ApiError("bad_request",
                           f"unknown persona_kind: {persona!r}")
        if not text.strip():
            raise ApiError("bad_request", "steering text must be non-empty")
        with lock:
            orch.add_steering(persona, text)
        return {"queued": len(orch.steering.get(persona, []))}

    @app.get("/experiments/{trial_id}/metrics")
    async def get_metrics(trial_id: str, request: Request):
        check_auth(request)
        trial = get_trial(trial_id)
        return {
            "trial_id": trial.id,
            "phase": trial.phase,
            "reports": orch.metrics_history.get(trial.id, []),
            "guardrail_threshold": orch.config.guardrail_threshold,
        }

    return app


def serve(orch: Orchestrator, host: str = "127.0.0.1", port: int = 8321,
          tick_interval: float = 1.0,
          token_env: str = DEFAULT_TOKEN_ENV) -> None:
    """Run the API with a background thread driving the scheduler."""
    import uvicorn

    app = create_app(orch, token_env)
    stop = threading.Event()

    def ticker():
        while not stop.wait(tick_interval):
            with app.state.tick_lock:
                orch.tick()

    thread = threading.Thread(target=ticker, daemon=True)
    thread.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        stop.set()
        thread.join(timeout=2.0)
