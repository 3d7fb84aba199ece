"""HTTP API tying dialog, simulation, optimization and storage together.

Versioned under /v1.  Sessions live in memory, keyed by unguessable
128-bit ids; each session serializes its own mutations while distinct
sessions proceed independently.  Simulations run synchronously with a hard
sample cap (desk-scale runs finish in well under a second), and every
simulate result is persisted to the warehouse before the response leaves.
What-if runs are stateless: they never touch the canonical problem or the
store.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field, replace

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from . import dialog
from .model import dist_from_doc, problem_to_doc, validate_problem
from .optimizer import analyze, report_to_doc
from .warehouse import SessionRecord, Warehouse

DEFAULT_MAX_SAMPLES = 2_000_000


@dataclass
class ServiceConfig:
    store_path: str = "decisim-store.log"
    cors_origins: tuple[str, ...] = ()
    llm: dialog.LlmConfig | None = None
    default_sample_count: int = dialog.DEFAULT_SAMPLE_COUNT
    default_seed: int = dialog.DEFAULT_SEED
    max_samples: int = DEFAULT_MAX_SAMPLES
    request_log: bool = True
    seed_starter_priors: bool = True  # populate a priorless store with the bundled spreads


@dataclass
class ApiSession:
    id: str
    state: dialog.DialogState
    backend: dialog.AgentBackend
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_report: dict | None = None
    last_record_id: str | None = None
    simulate_count: int = 0
    created_at: float = field(default_factory=time.time)


class CreateSessionBody(BaseModel):
    template_id: str = "two_option_cost_comparison"
    backend: str = "scripted"


class MessageBody(BaseModel):
    text: str


class SimulateBody(BaseModel):
    sample_count: int | None = Field(default=None, ge=1)
    seed: int | None = Field(default=None, ge=0)


class WhatifBody(BaseModel):
    overrides: dict[str, float | dict]
    sample_count: int | None = Field(default=None, ge=1)
    seed: int | None = Field(default=None, ge=0)


class FeedbackBody(BaseModel):
    rating: int | None = Field(default=None, ge=1, le=5)
    text: str = ""


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message, **extra})


def create_app(config: ServiceConfig | None = None, store: Warehouse | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="decisim", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.store = store or Warehouse(config.store_path)
    app.state.sessions: dict[str, ApiSession] = {}

    if config.seed_starter_priors and not app.state.store.priors():
        from .warehouse import load_starter_priors
        load_starter_priors(app.state.store)

    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    if config.request_log:
        @app.middleware("http")
        async def log_requests(request: Request, call_next):
            started = time.time()
            response = await call_next(request)
            print(json.dumps({
                "ts": started,
                "method": request.method,
                "path": request.url.path,
                "status": response.status_code,
                "ms": round((time.time() - started) * 1000.0, 3),
            }), flush=True)
            return response

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        fields = [
            {"field": ".".join(str(p) for p in err["loc"] if p != "body"), "message": err["msg"]}
            for err in exc.errors()
        ]
        return _error(400, "malformed_body", "request body failed validation", fields=fields)

    def get_session(session_id: str) -> ApiSession | None:
        return app.state.sessions.get(session_id)

    def phase_payload(session: ApiSession) -> dict:
        state = session.state
        return {
            "phase": state.phase.value,
            "filled_slots": {
                name: {"value": f.value, "raw_text": f.raw_text}
                for name, f in state.filled.items()
            },
            "pending_slots": list(state.pending),
        }

    @app.get("/healthz")
    @app.get("/v1/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/v1/sessions", status_code=201)
    async def create_session(body: CreateSessionBody):
        try:
            schema = dialog.load_template(body.template_id)
        except dialog.TemplateError as exc:
            return _error(400, "unknown_template", str(exc))
        if body.backend == "scripted":
            backend: dialog.AgentBackend = dialog.ScriptedBackend.from_template(schema)
        elif body.backend == "llm":
            if config.llm is None:
                return _error(400, "llm_not_configured",
                              "no language-model endpoint configured for this server")
            backend = dialog.LlmBackend(config.llm)
        else:
            return _error(400, "unknown_backend", f"backend must be scripted or llm, got {body.backend!r}")
        session_id = secrets.token_hex(16)
        state = dialog.new_session(schema, session_id)
        session = ApiSession(id=session_id, state=state, backend=backend)
        app.state.sessions[session_id] = session
        first_question = backend.next_question(state)
        return {"session_id": session_id, "first_question": first_question,
                "template_id": schema.template_id}

    @app.post("/v1/sessions/{session_id}/messages")
    async def post_message(session_id: str, body: MessageBody):
        session = get_session(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        with session.lock:
            try:
                session.state, reply = dialog.advance(session.state, body.text, session.backend)
            except dialog.SessionClosedError as exc:
                return _error(409, "session_closed", str(exc))
            return {"agent_reply": reply, **phase_payload(session)}

    def build_problem(session: ApiSession, sample_count: int | None, seed: int | None):
        return dialog.build_problem(
            session.state,
            priors=app.state.store,
            sample_count=min(sample_count or config.default_sample_count, config.max_samples),
            seed=seed if seed is not None else config.default_seed,
        )

    @app.post("/v1/sessions/{session_id}/simulate")
    async def simulate_session(session_id: str, body: SimulateBody):
        session = get_session(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        with session.lock:
            if session.state.phase not in (dialog.Phase.READY_TO_SIMULATE, dialog.Phase.SIMULATED):
                return _error(409, "incomplete_slots",
                              "required information is still missing",
                              missing=list(session.state.pending))
            problem = build_problem(session, body.sample_count, body.seed)
            report_doc = report_to_doc(analyze(problem))
            report_doc["problem"] = problem_to_doc(problem)
            session.simulate_count += 1
            record_id = f"{session.id}/{session.simulate_count}"
            app.state.store.record_session(SessionRecord(
                id=record_id,
                problem_doc=report_doc["problem"],
                objective_source=problem.objective,
                seed=problem.seed,
                sample_count=problem.sample_count,
                report_doc={k: v for k, v in report_doc.items() if k != "problem"},
                transcript=session.state.transcript,
            ))
            session.last_report = report_doc
            session.last_record_id = record_id
            session.state = replace(session.state, phase=dialog.Phase.SIMULATED)
            return JSONResponse(content=report_doc)

    @app.post("/v1/sessions/{session_id}/whatif")
    async def whatif(session_id: str, body: WhatifBody):
        session = get_session(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        with session.lock:
            if session.state.phase not in (dialog.Phase.READY_TO_SIMULATE, dialog.Phase.SIMULATED):
                return _error(409, "incomplete_slots",
                              "required information is still missing",
                              missing=list(session.state.pending))
            problem = build_problem(session, body.sample_count, body.seed)
            try:
                problem = apply_overrides(problem, body.overrides)
            except KeyError as exc:
                return _error(400, "unknown_parameter", f"no alternative binds parameter {exc.args[0]!r}")
            except Exception as exc:
                return _error(400, "bad_override", str(exc))
            violations = validate_problem(problem)
            if violations:
                return _error(400, "invalid_override",
                              "overrides produce an invalid problem",
                              violations=[{"code": v.code, "path": v.path, "message": v.message}
                                          for v in violations])
            report_doc = report_to_doc(analyze(problem))
            report_doc["problem"] = problem_to_doc(problem)
            return JSONResponse(content=report_doc)

    @app.post("/v1/sessions/{session_id}/feedback", status_code=204)
    async def feedback(session_id: str, body: FeedbackBody):
        session = get_session(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        with session.lock:
            if session.last_record_id is None:
                return _error(409, "nothing_to_rate", "run a simulation before leaving feedback")
            payload = {"text": body.text}
            if body.rating is not None:
                payload["rating"] = body.rating
            app.state.store.attach_feedback(session.last_record_id, payload)
            session.state = replace(session.state, phase=dialog.Phase.CLOSED)
            return Response(status_code=204)

    return app


def apply_overrides(problem, overrides: dict):
    """Replace parameter distributions by name across every alternative.

    A bare number becomes Fixed(value); an object is parsed as a
    distribution document.  Raises KeyError for names no alternative binds.
    """
    from dataclasses import replace as dc_replace

    from .model import Fixed as FixedDist

    bound_anywhere = {name for alt in problem.alternatives for name in alt.bindings}
    for name in overrides:
        if name not in bound_anywhere:
            raise KeyError(name)

    new_alts = []
    for alt in problem.alternatives:
        bindings = dict(alt.bindings)
        for name, value in overrides.items():
            if name not in bindings:
                continue
            dist = FixedDist(float(value)) if isinstance(value, (int, float)) \
                else dist_from_doc(value, path=name)
            bindings[name] = dc_replace(bindings[name], distribution=dist)
        new_alts.append(dc_replace(alt, bindings=bindings))
    return dc_replace(problem, alternatives=tuple(new_alts))
