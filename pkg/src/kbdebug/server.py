"""HTTP/JSON session service so a human oracle can debug from a browser.

Sessions live in an in-process registry. Every mutation bumps a version
counter and all mutations of one session are serialized behind a lock, so
clients can POST answers optimistically: a stale version gets 409 and the
client refetches. The projection exposes no reasoner internals, only what
the UI renders.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import InconsistentInputError, KbDebugError, KbParseError, OracleContradictionError
from .formulas import KNOWN_ELEMENTS, ATOM_ELEMENT, format_formula
from .kbfile import parse_kb
from .probabilities import FaultProfile, axiom_probabilities
from .problem import DiagnosisProblem
from .queries import Strategy
from .reasoner import Reasoner
from .sessions import ANSWERS, DebugSession, KbSessionEngine, SessionConfig

DEFAULT_ELEMENT_P = 0.01

_STRATEGIES = {"entropy": "entropy", "split": "split_in_half", "random": "random"}


class CreateSessionRequest(BaseModel):
    kb_text: str
    profile: Optional[dict] = None
    n: int = 9
    sigma: float = 0.95
    strategy: str = "entropy"
    gamma: Optional[float] = None
    seed: int = 0
    stop_rule: str = "gap"


class AnswerRequest(BaseModel):
    answer: str
    version: Optional[int] = None


@dataclass
class SessionResource:
    id: str
    session: DebugSession
    axiom_texts: dict[str, str]
    version: int = 1
    lock: threading.Lock = field(default_factory=threading.Lock)

    def projection(self) -> dict:
        session = self.session
        part = session.current
        return {
            "id": self.id,
            "version": self.version,
            "status": session.status,
            "leading": [
                {
                    "axioms": sorted(d.ids),
                    "axiom_texts": [self.axiom_texts[a] for a in sorted(d.ids)],
                    "probability": d.probability,
                }
                for d in session.leading
            ],
            "query": [format_formula(f) for f in part.query],
            "counts": {"dx": len(part.dx), "dnx": len(part.dnx), "dz": len(part.dz)},
            "history": [
                {
                    "query": [format_formula(f) for f in entry.partition.query],
                    "answer": entry.answer,
                }
                for entry in session.history
            ],
            "result": [
                {
                    "axioms": sorted(d.ids),
                    "axiom_texts": [self.axiom_texts[a] for a in sorted(d.ids)],
                    "probability": d.probability,
                }
                for d in session.result()
            ],
        }


def _error(status: int, code: str, message: str, detail: str = "") -> HTTPException:
    return HTTPException(status_code=status,
                         detail={"code": code, "message": message, "detail": detail})


def create_app(ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="kbdebug session service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])
    registry: dict[str, SessionResource] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(HTTPException)
    async def handle_http_error(request, exc: HTTPException):
        detail = exc.detail if isinstance(exc.detail, dict) else {
            "code": "error", "message": str(exc.detail), "detail": ""}
        return JSONResponse(status_code=exc.status_code, content=detail)

    @app.post("/api/v1/sessions", status_code=201)
    def create_session(request: CreateSessionRequest) -> dict:
        try:
            kb = parse_kb(request.kb_text)
        except KbParseError as exc:
            raise _error(400, "parse_error", str(exc)) from exc
        except InconsistentInputError as exc:
            raise _error(400, "invalid_input", str(exc)) from exc
        if request.strategy not in _STRATEGIES:
            raise _error(400, "bad_request", f"unknown strategy {request.strategy!r}")
        if request.profile is not None:
            try:
                profile = FaultProfile(request.profile.get("elements", {}),
                                       request.profile.get("axiom_overrides", {}))
            except ValueError as exc:
                raise _error(400, "bad_request", str(exc)) from exc
        else:
            names = set(KNOWN_ELEMENTS) | {ATOM_ELEMENT}
            for ax in kb.axioms:
                names |= {name for name, _ in ax.elements}
            profile = FaultProfile.uniform(names, DEFAULT_ELEMENT_P)
        problem = DiagnosisProblem.from_kb(kb)
        reasoner = Reasoner()
        try:
            axiom_probs = axiom_probabilities(kb, profile)
            config = SessionConfig(
                n=request.n, sigma=request.sigma,
                strategy=Strategy(_STRATEGIES[request.strategy], seed=request.seed),
                gamma=request.gamma, stop_rule=request.stop_rule)
        except (KeyError, ValueError) as exc:
            raise _error(400, "bad_request", str(exc)) from exc
        engine = KbSessionEngine(problem, axiom_probs, reasoner)
        try:
            session = DebugSession(engine, config, problem)
        except KbDebugError as exc:
            raise _error(400, "invalid_input", str(exc)) from exc
        if len(session.leading) == 1 and not session.leading[0].ids:
            raise _error(422, "conflict_free", "the KB satisfies all requirements; nothing to debug")
        resource = SessionResource(
            id=secrets.token_urlsafe(12),
            session=session,
            axiom_texts={ax.id: " ; ".join(format_formula(f) for f in ax.formulas)
                         for ax in kb.axioms},
        )
        with registry_lock:
            registry[resource.id] = resource
        return resource.projection()

    def _get(session_id: str) -> SessionResource:
        with registry_lock:
            resource = registry.get(session_id)
        if resource is None:
            raise _error(404, "not_found", f"no session {session_id!r}")
        return resource

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _get(session_id).projection()

    @app.post("/api/v1/sessions/{session_id}/answer")
    def answer(session_id: str, request: AnswerRequest) -> dict:
        resource = _get(session_id)
        if request.answer not in ANSWERS:
            raise _error(400, "bad_request", f"answer must be one of {ANSWERS}")
        with resource.lock:
            if request.version is not None and request.version != resource.version:
                raise _error(409, "stale_version",
                             f"version {request.version} != current {resource.version}")
            if not resource.session.running:
                raise _error(409, "not_running",
                             f"session already {resource.session.status}")
            try:
                resource.session.answer(request.answer)
            except OracleContradictionError as exc:
                raise _error(409, "contradiction", str(exc)) from exc
            resource.version += 1
            return resource.projection()

    @app.delete("/api/v1/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str) -> None:
        with registry_lock:
            registry.pop(session_id, None)

    if ui_dir is not None and ui_dir.exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
