"""HTTP service exposing planning sessions: CRUD, stepping, verdicts, and a
live event stream.

Sessions live in memory. Every mutating call on a session goes through a
non-blocking per-session lock, so concurrent writers get 409 instead of
interleaving; readers (snapshots, streams) never block writers. The event
stream is server-sent events with gap-free sequence ids, so a client that
reconnects with its last seen id resumes exactly where it left off.
"""

from __future__ import annotations

import asyncio
import json
import threading
from dataclasses import dataclass, field

from fastapi import Depends, FastAPI, Header, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .advisor import make_advisor
from .catalog import MapLoadError, list_shipped, load_shipped, resolve
from .grid import MapError, load_map
from .search import UnknownCandidate
from .session import (
    AWAIT_VERDICT,
    DONE,
    FAILED,
    IncompatibleConfig,
    PlanningSession,
    ValueParams,
    WrongPhase,
    create_session,
)

TRANSCRIPT_TAIL = 50
STREAM_POLL_S = 0.05


@dataclass
class _Slot:
    session: PlanningSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    deleted: bool = False


def rle_encode(cells: list[str]) -> list[list]:
    """Run-length encode the per-cell class list: [[count, class], ...]."""
    out: list[list] = []
    for cell in cells:
        if out and out[-1][1] == cell:
            out[-1][0] += 1
        else:
            out.append([1, cell])
    return out


def rle_decode(runs: list[list]) -> list[str]:
    out: list[str] = []
    for count, cell in runs:
        out.extend([cell] * count)
    return out


def wire_session(session: PlanningSession) -> dict:
    snap = session.snapshot()
    return {
        "id": snap["id"],
        "phase": snap["phase"],
        "planner": snap["planner"],
        "advisor": snap["advisor"],
        "autopilot": snap["autopilot"],
        "map_name": snap["map_name"],
        "width": snap["width"],
        "height": snap["height"],
        "grid": rle_encode(snap["cells"]),
        "path_gradient": snap["path_gradient"],
        "metrics": snap["metrics"],
        "pending": snap["pending"],
        "transcript": snap["transcript"][-TRANSCRIPT_TAIL:],
        "seq": snap["seq"],
        "failure_reason": snap["failure_reason"],
    }


def build_app(
    ui_origin: str | None = None,
    ui_dir: str | None = None,
    token: str | None = None,
) -> FastAPI:
    app = FastAPI(title="gridplan session service")
    sessions: dict[str, _Slot] = {}
    app.state.registry = sessions  # introspection for tests/diagnostics

    if ui_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[ui_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    def auth(authorization: str | None = Header(default=None)) -> None:
        if token and authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="bad or missing bearer token")

    def get_slot(session_id: str) -> _Slot:
        slot = sessions.get(session_id)
        if slot is None or slot.deleted:
            raise HTTPException(status_code=404, detail="unknown session")
        return slot

    @app.post("/sessions", status_code=201, dependencies=[Depends(auth)])
    def create(body: dict) -> dict:
        if not isinstance(body, dict):
            raise HTTPException(status_code=400, detail="body must be an object")
        planner = body.get("planner", "astar")
        advisor_name = body.get("advisor", "none")
        autopilot = bool(body.get("autopilot", True))
        try:
            if body.get("map_text"):
                grid = load_map(str(body["map_text"]), name=body.get("map_name") or "uploaded")
            elif body.get("map_name"):
                grid = resolve(str(body["map_name"]))
            else:
                raise HTTPException(status_code=400, detail="need map_name or map_text")
            advisor = make_advisor(advisor_name)
        except (MapError, MapLoadError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        params = body.get("value_params") or {}
        try:
            session = create_session(
                grid,
                planner,
                advisor,
                autopilot=autopilot,
                value_params=ValueParams(**params) if params else None,
            )
        except IncompatibleConfig as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        sessions[session.id] = _Slot(session)
        return wire_session(session)

    @app.get("/sessions/{session_id}", dependencies=[Depends(auth)])
    def get(session_id: str) -> dict:
        return wire_session(get_slot(session_id).session)

    @app.post("/sessions/{session_id}/step", dependencies=[Depends(auth)])
    def step(session_id: str, body: dict) -> dict:
        count = body.get("count", 1)
        if not isinstance(count, int) or count < 1:
            raise HTTPException(status_code=400, detail="count must be an integer >= 1")
        slot = get_slot(session_id)
        if not slot.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="session busy (serialized writer)")
        try:
            session = slot.session
            events = []
            for _ in range(count):
                if session.phase in (AWAIT_VERDICT, DONE, FAILED):
                    break
                events.append(session.step().to_json())
            return {
                "events": events,
                "phase": session.phase,
                "seq": session.events[-1].seq if session.events else 0,
            }
        finally:
            slot.lock.release()

    @app.post("/sessions/{session_id}/verdict", dependencies=[Depends(auth)])
    def verdict(session_id: str, body: dict) -> dict:
        raw = body.get("verdicts")
        if not isinstance(raw, list):
            raise HTTPException(status_code=400, detail="verdicts must be a list")
        try:
            mapping = {int(v["id"]): bool(v["accept"]) for v in raw}
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed verdicts: {exc}")
        slot = get_slot(session_id)
        if not slot.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="session busy (serialized writer)")
        try:
            event = slot.session.submit_verdict(mapping)
            return {"event": event.to_json(), "phase": slot.session.phase,
                    "seq": event.seq}
        except WrongPhase as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except UnknownCandidate as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        finally:
            slot.lock.release()

    @app.delete("/sessions/{session_id}", status_code=204, dependencies=[Depends(auth)])
    def delete(session_id: str) -> Response:
        slot = get_slot(session_id)
        slot.deleted = True
        del sessions[session_id]
        return Response(status_code=204)

    @app.get("/maps", dependencies=[Depends(auth)])
    def maps() -> list[dict]:
        out = []
        for name in list_shipped():
            grid = load_shipped(name)
            out.append({"name": name, "width": grid.width, "height": grid.height})
        return out

    @app.get("/sessions/{session_id}/events", dependencies=[Depends(auth)])
    async def events(
        session_id: str,
        request: Request,
        since: int = 0,
        last_event_id: str | None = Header(default=None, alias="Last-Event-ID"),
    ) -> StreamingResponse:
        slot = get_slot(session_id)
        start_after = int(last_event_id) if last_event_id else since

        async def stream():
            cursor = start_after
            while True:
                if await request.is_disconnected() or slot.deleted:
                    return
                log = slot.session.events
                while cursor < len(log):
                    event = log[cursor]
                    cursor += 1
                    payload = json.dumps(event.to_json(), sort_keys=True)
                    yield f"id: {event.seq}\ndata: {payload}\n\n"
                if slot.session.phase in (DONE, FAILED):
                    yield "event: end\ndata: {}\n\n"
                    return
                await asyncio.sleep(STREAM_POLL_S)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.exception_handler(WrongPhase)
    def wrong_phase_handler(request: Request, exc: WrongPhase) -> JSONResponse:
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
