"""Session-based HTTP facade for step-wise decoding with human edits.

Each session holds one source, one search configuration, and the current
beam; a step optionally applies context edits (scores retained), then
advances the beam by exactly one depth.  Edit-free stepping reproduces the
one-shot decoder bit for bit because both run the same per-depth routine.
"""

from __future__ import annotations

import threading
import time
import uuid
from typing import Optional, Sequence

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .model.base import ModelError, ScoreModel
from .search import (
    BeamCandidate,
    SearchConfig,
    SearchError,
    advance_beam,
    candidate_to_obj,
    is_terminated,
    rank_candidates,
    root_candidate,
    step_to_obj,
    structural_beam_search,
)
from .tree import (
    Placeholder,
    SyntaxContext,
    TreeError,
    parse_context_item,
    parse_template,
)

DEFAULT_TTL = 1800.0


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad_request(message: str) -> ServiceError:
    return ServiceError(400, "bad_request", message)


def _not_found(message: str) -> ServiceError:
    return ServiceError(404, "not_found", message)


def parse_config(obj: Optional[dict]) -> SearchConfig:
    obj = obj or {}
    known = {"k", "alpha", "gamma", "d_max", "t_max", "template", "seed"}
    unknown = set(obj) - known
    if unknown:
        raise _bad_request(f"unknown config fields: {sorted(unknown)}")
    kwargs = {key: obj[key] for key in known & set(obj)}
    if kwargs.get("template") is not None:
        try:
            kwargs["template"] = parse_template(kwargs["template"])
        except TreeError as e:
            raise _bad_request(f"bad template: {e}")
    try:
        return SearchConfig(**kwargs)
    except (TypeError, ValueError) as e:
        raise _bad_request(f"bad config: {e}")


class Session:
    def __init__(self, source: tuple, config: SearchConfig, h_src):
        self.id = uuid.uuid4().hex
        self.source = source
        self.config = config
        self.h_src = h_src
        self.depth = 0
        self.beam = [root_candidate()]
        self.history: list = []
        self.lock = threading.Lock()
        self.touched = time.monotonic()

    @property
    def status(self) -> str:
        if all(c.failed for c in self.beam):
            return "failed"
        if self.depth >= self.config.d_max or all(
            c.finished or c.failed for c in self.beam
        ):
            return "finished"
        return "active"

    def beam_obj(self) -> list:
        return [
            {
                "index": i,
                "context": list(c.context.render()),
                "score": c.score,
                "finished": c.finished,
                "failed": c.failed,
            }
            for i, c in enumerate(self.beam)
        ]

    def snapshot(self) -> dict:
        obj = {
            "session_id": self.id,
            "depth": self.depth,
            "status": self.status,
            "beam": self.beam_obj(),
        }
        if self.status != "active":
            obj["hypotheses"] = _hypotheses(self.beam)
        return obj


def _hypotheses(beam: Sequence[BeamCandidate]) -> list:
    return [
        {
            "tokens": c.tokens(),
            "score": c.score,
            "finished": c.finished,
            "failed": c.failed,
            "trace": [step_to_obj(s) for s in c.trace],
        }
        for c in rank_candidates(beam)
    ]


def _validate_edit_context(items: Sequence[str], whitelist: set) -> SyntaxContext:
    if not isinstance(items, list) or not all(isinstance(s, str) for s in items):
        raise _bad_request("edit context must be a list of strings")
    try:
        ctx = SyntaxContext.from_strings(items)
    except TreeError as e:
        raise _bad_request(f"bad edit context: {e}")
    for it in ctx.items:
        if isinstance(it, Placeholder) and it.label not in whitelist:
            raise _bad_request(f"placeholder label not whitelisted: {it.label!r}")
    return ctx


def create_app(
    model: ScoreModel, whitelist: set, ttl: float = DEFAULT_TTL
) -> FastAPI:
    app = FastAPI()
    sessions: dict = {}
    registry_lock = threading.Lock()

    def purge():
        now = time.monotonic()
        with registry_lock:
            for sid in [s for s, sess in sessions.items() if now - sess.touched > ttl]:
                del sessions[sid]

    def get_session(sid: str) -> Session:
        purge()
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None:
            raise _not_found(f"unknown session: {sid}")
        sess.touched = time.monotonic()
        return sess

    @app.exception_handler(ServiceError)
    async def on_service_error(request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(Exception)
    async def on_internal_error(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"error": {"code": "internal", "message": str(exc)}},
        )

    async def body_of(request: Request) -> dict:
        try:
            obj = await request.json()
        except Exception:
            raise _bad_request("request body must be JSON")
        if not isinstance(obj, dict):
            raise _bad_request("request body must be a JSON object")
        return obj

    def read_source(obj: dict) -> tuple:
        source = obj.get("source")
        if not isinstance(source, list) or not source or not all(
            isinstance(t, str) and t for t in source
        ):
            raise _bad_request("source must be a non-empty list of tokens")
        unknown = [t for t in source if t not in model.vocab]
        if unknown:
            raise _bad_request(f"source tokens not in vocabulary: {unknown}")
        return tuple(source)

    @app.get("/healthz")
    async def healthz():
        return {
            "status": "ok",
            "model_kind": model.kind,
            "vocab_size": len(model.vocab),
        }

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        obj = await body_of(request)
        source = read_source(obj)
        config = parse_config(obj.get("config"))
        sess = Session(source, config, model.encode_source(source))
        purge()
        with registry_lock:
            sessions[sess.id] = sess
        return sess.snapshot()

    @app.post("/sessions/{sid}/step")
    async def step(sid: str, request: Request):
        obj = await body_of(request)
        sess = get_session(sid)
        edits = obj.get("edits") or []
        if not isinstance(edits, list):
            raise _bad_request("edits must be a list")
        with sess.lock:
            if sess.status != "active":
                raise ServiceError(
                    409, "session_not_active", f"session is {sess.status}"
                )
            applied = []
            for edit in edits:
                if not isinstance(edit, dict) or "index" not in edit:
                    raise _bad_request("each edit needs an index and a context")
                idx = edit["index"]
                if not isinstance(idx, int) or not 0 <= idx < len(sess.beam):
                    raise _bad_request(f"bad candidate index: {idx!r}")
                cand = sess.beam[idx]
                if cand.finished or cand.failed:
                    raise _bad_request(f"candidate {idx} is not live")
                ctx = _validate_edit_context(edit.get("context"), whitelist)
                sess.beam[idx] = BeamCandidate(
                    ctx,
                    cand.score,
                    finished=is_terminated(ctx),
                    trace=cand.trace,
                )
                applied.append({"index": idx, "context": list(ctx.render())})
            try:
                sess.beam = advance_beam(
                    model, sess.h_src, sess.beam, sess.config, sess.depth
                )
            except ModelError as e:
                raise ServiceError(500, "model_error", str(e))
            sess.depth += 1
            expansions = [
                {
                    "parent_index": s.parent_index,
                    "infilling": list(s.infilling.tokens),
                    "delta_f": s.delta_f,
                    "delta": s.delta,
                    "reward": s.reward,
                }
                for c in sess.beam
                if c.trace and c.trace[-1].depth == sess.depth - 1
                for s in [c.trace[-1]]
            ]
            sess.history.append(
                {
                    "depth": sess.depth - 1,
                    "edits": applied,
                    "expansions": expansions,
                    "beam_after": sess.beam_obj(),
                }
            )
            snap = sess.snapshot()
            snap["expansions"] = expansions
            return snap

    @app.get("/sessions/{sid}")
    async def read_session(sid: str):
        sess = get_session(sid)
        with sess.lock:
            obj = sess.snapshot()
            obj["source"] = list(sess.source)
            obj["history"] = sess.history
            obj["candidates"] = [candidate_to_obj(c) for c in sess.beam]
            return obj

    @app.post("/generate")
    async def generate(request: Request):
        obj = await body_of(request)
        source = read_source(obj)
        config = parse_config(obj.get("config"))
        try:
            ranked = structural_beam_search(model, source, config)
        except SearchError as e:
            raise ServiceError(422, "decode_failed", str(e))
        return {"hypotheses": _hypotheses(ranked)}

    return app
