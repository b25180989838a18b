"""HTTP/JSON API over models, analyses, and configuration sessions.

State lives in two in-memory registries keyed by opaque ids: parsed models
and live sessions. Sessions are evicted after an idle TTL; nothing persists
across restarts except what clients keep (the model text and exported
decision logs, which replay to the same state).

Every non-2xx response body is one shape: {"error": {"code", "message",
...}}. Conflicts (409) carry the culprit constraint and the emptied
variable so clients can explain the rejection.
"""

from __future__ import annotations

import asyncio
import os
import threading
import time
import uuid
from typing import Any, Callable, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from .analyses import json_int, run_analysis, solution_json
from .errors import (
    ExprTypeError,
    FeatlineError,
    OutOfRangeError,
    UnknownGoalError,
    UnknownNameError,
    UnsatisfiableError,
    VoidModelError,
)
from .fd import Strategy
from .model import (
    Diagnostic,
    FeatureModel,
    IntRange,
    render_expr,
)
from .parser import parse
from .session import Conflict, Restriction, Session

DEFAULT_TIME_BUDGET_MS = 10000
DEFAULT_SESSION_TTL_S = 3600
DEFAULT_COUNT_CAP = 10000


class ApiError(Exception):
    """Carried straight into the response body."""

    def __init__(self, status: int, code: str, message: str, **extra: Any):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.extra = extra

    def body(self) -> dict:
        doc = {"code": self.code, "message": self.message}
        doc.update(self.extra)
        return {"error": doc}


def _diag_json(d: Diagnostic) -> dict:
    doc: dict = {"code": d.code, "message": d.message}
    if d.span is not None:
        doc["span"] = {"line": d.span.line, "column": d.span.column}
    return doc


def _model_summary(mid: str, m: FeatureModel) -> dict:
    features = []
    for f in m.features:
        attrs = []
        for a in f.attributes:
            if isinstance(a.domain, IntRange):
                dom: dict = {"range": [json_int(a.domain.lo),
                                       json_int(a.domain.hi)]}
            else:
                dom = {"values": list(a.domain.values)}
            attrs.append({"name": a.name, "domain": dom})
        features.append({
            "name": f.name,
            "max_count": f.max_count,
            "parent": f.parent,
            "edge": f.edge.value if f.parent is not None else None,
            "attributes": attrs,
        })
    return {
        "model_id": mid,
        "name": m.name,
        "features": features,
        "enums": [{"name": e.name, "codes": list(e.codes)} for e in m.enums],
        "groups": [{"parent": g.parent, "lo": g.lo, "hi": g.hi,
                    "members": list(g.members)} for g in m.groups],
        "cross_deps": [{"kind": d.kind.value, "source": d.source,
                        "target": d.target, "scope": d.scope.value,
                        "offset": d.offset} for d in m.cross_deps],
        "constraints": [render_expr(e) for e in m.constraints],
        "goals": [{"name": g.name, "direction": g.direction.value,
                   "expr": render_expr(g.expr)} for g in m.goals],
    }


class _SessionEntry:
    def __init__(self, session: Session, model_id: str):
        self.session = session
        self.model_id = model_id
        self.lock = threading.Lock()
        self.last_used = time.monotonic()


class _Registries:
    def __init__(self, session_ttl_s: float):
        self.models: dict[str, FeatureModel] = {}
        self.model_texts: dict[str, str] = {}
        self.sessions: dict[str, _SessionEntry] = {}
        self.session_ttl_s = session_ttl_s
        self._lock = threading.Lock()

    @staticmethod
    def _new_id(prefix: str) -> str:
        return f"{prefix}-{uuid.uuid4().hex[:12]}"

    def add_model(self, m: FeatureModel, text: str) -> str:
        with self._lock:
            mid = self._new_id("m")
            self.models[mid] = m
            self.model_texts[mid] = text
            return mid

    def model(self, mid: str) -> FeatureModel:
        m = self.models.get(mid)
        if m is None:
            raise ApiError(404, "unknown-model", f"no model '{mid}'")
        return m

    def add_session(self, s: Session, model_id: str) -> str:
        with self._lock:
            sid = self._new_id("s")
            self.sessions[sid] = _SessionEntry(s, model_id)
            return sid

    def session(self, sid: str) -> _SessionEntry:
        self.sweep()
        entry = self.sessions.get(sid)
        if entry is None:
            raise ApiError(404, "unknown-session", f"no session '{sid}'")
        entry.last_used = time.monotonic()
        return entry

    def drop_session(self, sid: str) -> bool:
        with self._lock:
            return self.sessions.pop(sid, None) is not None

    def sweep(self) -> None:
        cutoff = time.monotonic() - self.session_ttl_s
        with self._lock:
            idle = [sid for sid, e in self.sessions.items()
                    if e.last_used < cutoff]
            for sid in idle:
                del self.sessions[sid]


def _strategy_from(params: dict) -> Strategy:
    try:
        return Strategy.named(params.get("var_order", "declaration"),
                              params.get("value_order", "ascending"))
    except ValueError as e:
        raise ApiError(400, "bad-strategy", str(e))


def _require(doc: Any, field: str, kind: type, what: str) -> Any:
    if not isinstance(doc, dict) or field not in doc:
        raise ApiError(400, "bad-request", f"{what} needs a '{field}' field")
    v = doc[field]
    if kind is int and isinstance(v, bool) or not isinstance(v, kind):
        raise ApiError(400, "bad-request",
                       f"'{field}' must be a {kind.__name__}")
    return v


def _default_static_dir() -> Optional[str]:
    # a checkout with the UI built in place; wheel installs have none
    guess = os.path.abspath(os.path.join(
        os.path.dirname(__file__), "..", "..", "frontend", "dist"))
    if os.path.isfile(os.path.join(guess, "index.html")):
        return guess
    return None


def create_app(session_ttl_s: float = DEFAULT_SESSION_TTL_S,
               time_budget_ms: Optional[int] = None,
               count_cap: Optional[int] = None,
               cors_origins: Optional[list[str]] = None,
               static_dir: Optional[str] = None) -> FastAPI:
    if time_budget_ms is None:
        time_budget_ms = int(os.environ.get("FEATLINE_TIME_BUDGET_MS",
                                            DEFAULT_TIME_BUDGET_MS))
    if count_cap is None:
        count_cap = int(os.environ.get("FEATLINE_CAP", DEFAULT_COUNT_CAP))
    if cors_origins is None:
        raw = os.environ.get("FEATLINE_CORS_ORIGINS", "*")
        cors_origins = [o.strip() for o in raw.split(",") if o.strip()]

    app = FastAPI(title="featline", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    reg = _Registries(session_ttl_s)
    app.state.registries = reg

    # -- error shaping --------------------------------------------------------

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse(exc.body(), status_code=exc.status)

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc):
        return JSONResponse(
            {"error": {"code": "bad-request", "message": str(exc)}},
            status_code=400)

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        return JSONResponse(
            {"error": {"code": "http-error", "message": str(exc.detail)}},
            status_code=exc.status_code)

    @app.exception_handler(FeatlineError)
    async def on_featline_error(request: Request, exc: FeatlineError):
        return JSONResponse(
            {"error": {"code": "internal", "message": str(exc)}},
            status_code=500)

    # -- long-running work: worker thread + abort/budget stop ------------------

    async def bounded(request: Request, fn: Callable[[Callable[[], bool]], Any]):
        """Run fn(should_stop) off the event loop. The stop callback trips
        when the client disconnects or the time budget runs out; fn then
        returns whatever partial result it has."""
        aborted = threading.Event()
        deadline = time.monotonic() + time_budget_ms / 1000.0

        def should_stop() -> bool:
            return aborted.is_set() or time.monotonic() >= deadline

        loop = asyncio.get_running_loop()
        task = loop.run_in_executor(None, lambda: fn(should_stop))
        while True:
            done, _ = await asyncio.wait([task], timeout=0.05)
            if done:
                return task.result()
            if not aborted.is_set() and await request.is_disconnected():
                aborted.set()

    # -- models ----------------------------------------------------------------

    @app.post("/models")
    async def post_model(request: Request):
        doc = await _json_body(request)
        text = _require(doc, "text", str, "model upload")
        m, diags = parse(text)
        if m is None or diags:
            return {"model_id": None,
                    "diagnostics": [_diag_json(d) for d in diags]}
        return {"model_id": reg.add_model(m, text), "diagnostics": []}

    @app.get("/models/{mid}")
    def get_model(mid: str):
        return _model_summary(mid, reg.model(mid))

    @app.post("/models/{mid}/analyses")
    async def post_analysis(mid: str, request: Request):
        m = reg.model(mid)
        doc = await _json_body(request)
        kind = _require(doc, "kind", str, "analysis request")
        params = doc.get("params") or {}
        if not isinstance(params, dict):
            raise ApiError(400, "bad-request", "'params' must be an object")
        _strategy_from(params)  # fail fast on bad strategy names
        try:
            report = await bounded(
                request, lambda stop: run_analysis(m, kind, params, stop))
        except VoidModelError as e:
            raise ApiError(422, "void-model", str(e))
        except UnsatisfiableError as e:
            raise ApiError(422, "unsatisfiable", str(e))
        except (UnknownGoalError, UnknownNameError, OutOfRangeError) as e:
            raise ApiError(400, "bad-analysis", str(e))
        return report.to_json(include_elapsed=True)

    # -- sessions ----------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    async def post_session(request: Request):
        doc = await _json_body(request)
        mid = _require(doc, "model_id", str, "session creation")
        m = reg.model(mid)
        try:
            s = Session(m, _strategy_from(doc), count_cap=count_cap)
        except VoidModelError as e:
            raise ApiError(422, "void-model", str(e))
        sid = reg.add_session(s, mid)
        return {"session_id": sid, "view": s.view().to_json()}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        entry = reg.session(sid)
        with entry.lock:
            return {"model_id": entry.model_id,
                    "view": entry.session.view().to_json(),
                    "log": entry.session.export_log()}

    @app.post("/sessions/{sid}/decisions")
    async def post_decision(sid: str, request: Request):
        entry = reg.session(sid)
        doc = await _json_body(request)
        name = _require(doc, "name", str, "decision")
        rdoc = _require(doc, "restriction", dict, "decision")
        try:
            restriction = Restriction.from_json(rdoc)
        except (OutOfRangeError, FeatlineError) as e:
            raise ApiError(400, "bad-restriction", str(e))
        with entry.lock:
            try:
                out = entry.session.decide(name, restriction)
            except UnknownNameError as e:
                raise ApiError(400, "unknown-name", str(e))
            return _delta_or_conflict(out)

    @app.post("/sessions/{sid}/constraints")
    async def post_constraint(sid: str, request: Request):
        entry = reg.session(sid)
        doc = await _json_body(request)
        text = _require(doc, "expr_text", str, "constraint")
        with entry.lock:
            try:
                out = entry.session.add_constraint(text)
            except ExprTypeError as e:
                raise ApiError(400, "bad-expression", str(e))
            return _delta_or_conflict(out)

    @app.post("/sessions/{sid}/undo")
    async def post_undo(sid: str, request: Request):
        entry = reg.session(sid)
        doc = await _json_body(request)
        k = _require(doc, "k", int, "undo")
        with entry.lock:
            try:
                delta = entry.session.undo(k)
            except OutOfRangeError as e:
                raise ApiError(400, "out-of-range", str(e))
            return {"delta": delta.to_json()}

    @app.post("/sessions/{sid}/solutions/next")
    def post_next_solution(sid: str):
        entry = reg.session(sid)
        with entry.lock:
            sol = entry.session.next_solution()
        if sol is None:
            return Response(status_code=204)
        return {"solution": solution_json(sol)}

    @app.post("/sessions/{sid}/optimize")
    async def post_optimize(sid: str, request: Request):
        entry = reg.session(sid)
        doc = await _json_body(request)
        goal = _require(doc, "goal", str, "optimize")
        deadline = time.monotonic() + time_budget_ms / 1000.0
        with entry.lock:
            try:
                res = entry.session.optimize(
                    goal, should_stop=lambda: time.monotonic() >= deadline)
            except UnknownGoalError as e:
                raise ApiError(400, "unknown-goal", str(e))
            except UnsatisfiableError as e:
                raise ApiError(422, "unsatisfiable", str(e))
        return {
            "goal": goal,
            "value": None if res.value is None else json_int(res.value),
            "solution": None if res.assignment is None
            else solution_json(res.assignment),
            "proven": res.proven,
        }

    @app.delete("/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        if not reg.drop_session(sid):
            raise ApiError(404, "unknown-session", f"no session '{sid}'")
        return Response(status_code=204)

    # Built UI assets, when present. Mounted last so the API paths above
    # always win; "/" then serves index.html.
    static = static_dir or os.environ.get("FEATLINE_STATIC") or _default_static_dir()
    if static:
        app.mount("/", StaticFiles(directory=static, html=True), name="ui")

    return app


async def _json_body(request: Request) -> dict:
    try:
        doc = await request.json()
    except Exception:
        raise ApiError(400, "bad-request", "body must be a JSON object")
    if not isinstance(doc, dict):
        raise ApiError(400, "bad-request", "body must be a JSON object")
    return doc


def _delta_or_conflict(out):
    if isinstance(out, Conflict):
        raise ApiError(409, "conflict", f"rejected: {out.action}",
                       culprit=out.culprit, variable=out.variable,
                       action=out.action)
    return {"delta": out.to_json()}


def serve(host: str = "127.0.0.1", port: int = 8000) -> None:
    """Run the API under uvicorn (the `featline serve` subcommand)."""
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port)
