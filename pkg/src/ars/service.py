"""HTTP layer: REST endpoints, teacher auth, participant tokens, the live
statistics stream (SSE with a long-poll fallback), and static UI hosting.

Run with ``arsserve --config ars.conf`` or build an app for tests with
:func:`create_app`.
"""

from __future__ import annotations

import asyncio
import contextlib
import getpass
import json
import threading
import urllib.parse
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse, Response, StreamingResponse
from pydantic import BaseModel

from ars.auth import SessionStore, hash_password
from ars.clock import Clock, SystemClock, iso, parse_iso
from ars.config import ServiceConfig, load_config
from ars.engine import CLOSED, Engine, Submission
from ars.errors import (
    ArsError,
    BadJoinCodeError,
    NotPublishedError,
    SubmitCapExceededError,
    WindowClosedError,
)
from ars.eventlog import EventLog
from ars.model import ChoiceKind, GroupState, Visibility
from ars.stats import StatsFilter, export_csv


class LoginBody(BaseModel):
    password: str


class QuestionBody(BaseModel):
    text: str
    kind: str
    options: list[str]


class QuestionPatch(BaseModel):
    text: Optional[str] = None
    kind: Optional[str] = None
    options: Optional[list[str]] = None


class GroupBody(BaseModel):
    title: str
    question_ids: list[str]
    visibility: str = "protected"


class GroupStateBody(BaseModel):
    state: str


class WindowBody(BaseModel):
    duration_s: Optional[float] = None


class TokenBody(BaseModel):
    join_code: Optional[str] = None


class SubmitBody(BaseModel):
    participant_token: str
    question_id: str
    selected_options: list[str]
    idempotency_key: Optional[str] = None
    client_note: Optional[str] = None


def question_json(rev) -> dict:
    return {
        "question_id": rev.question_id,
        "revision": rev.revision,
        "text": rev.text,
        "kind": rev.kind.value,
        "options": [{"option_id": o.option_id, "label": o.label}
                    for o in rev.options],
    }


def group_json(group) -> dict:
    return {
        "group_id": group.group_id,
        "title": group.title,
        "state": group.state.value,
        "visibility": group.visibility.value,
        "items": [{"question_id": q, "revision": r} for q, r in group.items],
    }


def window_json(window, teacher: bool = False) -> dict:
    data = {
        "window_id": window.window_id,
        "group_id": window.group_id,
        "opened_at": iso(window.opened_at),
        "duration_s": window.duration_s,
        "deadline": iso(window.deadline_ms) if window.deadline_ms is not None else None,
        "state": window.state,
        "closed_at": iso(window.closed_at) if window.closed_at is not None else None,
        "published": window.published,
    }
    if teacher:
        data["join_code"] = window.join_code
    return data


def stats_json(stats, version: int | None = None, final: bool | None = None) -> dict:
    data = {
        "filter": stats.filter.to_json(),
        "questions": [
            {
                "question_id": q.question_id,
                "revision": q.revision,
                "text": q.text,
                "kind": q.kind.value,
                "respondent_count": q.respondent_count,
                "options": [
                    {
                        "option_id": o.option_id,
                        "label": o.label,
                        "count": o.count,
                        "fraction": float(o.fraction),
                        "fraction_exact": f"{o.fraction.numerator}/{o.fraction.denominator}",
                    }
                    for o in q.options
                ],
            }
            for q in stats.questions
        ],
    }
    if version is not None:
        data["version"] = version
    if final is not None:
        data["final"] = final
    return data


_PLACEHOLDER = """<!doctype html><meta charset="utf-8">
<title>audience response</title>
<p>No UI build found. Build the frontend and point STATIC_DIR at its dist/.</p>
"""


def create_app(config: ServiceConfig | None = None, engine: Engine | None = None,
               clock: Clock | None = None) -> FastAPI:
    config = config or ServiceConfig()
    clock = clock or SystemClock()
    if engine is None:
        data_dir = Path(config.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        engine = Engine(log=EventLog(data_dir / "events.arslog"), clock=clock)

    stop_sweep = threading.Event()

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        def sweep() -> None:
            while not stop_sweep.wait(0.5):
                engine.sweep_deadlines()
        threading.Thread(target=sweep, daemon=True, name="deadline-sweep").start()
        yield
        stop_sweep.set()

    app = FastAPI(title="audience response service", docs_url=None,
                  redoc_url=None, lifespan=lifespan)
    sessions = SessionStore(config.session_ttl_min)
    app.state.engine = engine
    app.state.sessions = sessions
    app.state.config = config

    @app.exception_handler(ArsError)
    async def _ars_error(_request: Request, exc: ArsError):
        return JSONResponse(status_code=exc.http_status,
                            content={"error": exc.code, "detail": exc.detail})

    def session_token(request: Request) -> str | None:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return header[7:]
        return request.query_params.get("session")

    def require_teacher(request: Request) -> None:
        sessions.require_teacher(session_token(request), clock.now_ms())

    # -- auth ---------------------------------------------------------------

    @app.post("/api/auth/login")
    def login(body: LoginBody):
        token, expires = sessions.login(body.password, config.teacher_password_hash,
                                        clock.now_ms())
        return {"token": token, "expires_at": iso(expires)}

    # -- authoring ----------------------------------------------------------

    @app.post("/api/questions", status_code=201)
    def create_question(body: QuestionBody, request: Request):
        require_teacher(request)
        rev = engine.make_question(body.text, ChoiceKind(body.kind), body.options)
        return question_json(rev)

    @app.patch("/api/questions/{question_id}")
    def edit_question(question_id: str, body: QuestionPatch, request: Request):
        require_teacher(request)
        rev = engine.edit_question(
            question_id,
            text=body.text,
            kind=ChoiceKind(body.kind) if body.kind else None,
            option_labels=body.options,
        )
        return question_json(rev)

    @app.get("/api/questions")
    def list_questions(request: Request):
        require_teacher(request)
        return [question_json(rev) for rev in engine.list_questions()]

    @app.post("/api/groups", status_code=201)
    def create_group(body: GroupBody, request: Request):
        require_teacher(request)
        group = engine.compose_group(body.title, body.question_ids,
                                     Visibility(body.visibility))
        return group_json(group)

    @app.post("/api/groups/{group_id}/state")
    def set_group_state(group_id: str, body: GroupStateBody, request: Request):
        require_teacher(request)
        return group_json(engine.set_group_state(group_id, GroupState(body.state)))

    # -- windows ------------------------------------------------------------

    @app.post("/api/groups/{group_id}/windows", status_code=201)
    def open_window(group_id: str, body: WindowBody, request: Request):
        require_teacher(request)
        window = engine.open_window(group_id, body.duration_s)
        return window_json(window, teacher=True)

    @app.post("/api/windows/{window_id}/close")
    def close_window(window_id: str, request: Request):
        require_teacher(request)
        summary = engine.close_window(window_id)
        return {
            "window_id": summary.window_id,
            "group_id": summary.group_id,
            "opened_at": iso(summary.opened_at),
            "closed_at": iso(summary.closed_at),
            "respondent_count": summary.respondent_count,
            "responses_flushed": summary.responses_flushed,
        }

    @app.get("/api/windows/{window_id}/status")
    def window_status(window_id: str):
        status = engine.window_status(window_id)
        return {
            "state": status.state,
            "remaining_s": status.remaining_s,
            "respondent_count": status.respondent_count,
        }

    @app.post("/api/windows/{window_id}/token", status_code=201)
    def issue_token(window_id: str, body: TokenBody | None = None):
        window = engine.get_window(window_id)
        if window.state == CLOSED:
            raise WindowClosedError(f"window {window_id!r} is closed")
        group = engine.get_group(window.group_id)
        if group.visibility is Visibility.PROTECTED:
            code = (body.join_code or "") if body else ""
            if code.strip().upper() != window.join_code:
                raise BadJoinCodeError("a valid join code is required")
        token = sessions.issue_participant(clock.now_ms(), window_id)
        return {"token": token.token, "window_id": window_id,
                "issued_at": iso(token.issued_at)}

    @app.get("/api/windows/{window_id}/view")
    def window_view(window_id: str, request: Request):
        # participant-facing: the pinned questions to render on the pad
        token = request.headers.get("x-participant-token") or \
            request.query_params.get("token")
        pt = sessions.participant(token)
        window = engine.get_window(window_id)
        if pt.window_id is not None and pt.window_id != window_id:
            raise BadJoinCodeError("token bound to a different window")
        group = engine.get_group(window.group_id)
        return {
            "window": window_json(window),
            "group": {"group_id": group.group_id, "title": group.title},
            "questions": [question_json(engine.pool.get(qid, rev))
                          for qid, rev in group.items],
        }

    @app.post("/api/windows/{window_id}/submit")
    def submit(window_id: str, body: SubmitBody):
        pt = sessions.participant(body.participant_token)
        if pt.window_id is not None and pt.window_id != window_id:
            raise BadJoinCodeError("token bound to a different window")
        if sessions.count_submit(pt.token) > config.submit_cap:
            raise SubmitCapExceededError("per-token submit cap reached")
        receipt = engine.submit(
            Submission(
                participant_token=pt.token,
                window_id=window_id,
                question_id=body.question_id,
                selected_options=frozenset(body.selected_options),
                client_note=body.client_note,
            ),
            idempotency_key=body.idempotency_key,
        )
        return {
            "receipt_id": receipt.receipt_id,
            "window_id": receipt.window_id,
            "question_id": receipt.question_id,
            "received_at": iso(receipt.received_at),
            "accepted": receipt.accepted,
            "replaced_prior": receipt.replaced_prior,
        }

    @app.post("/api/windows/{window_id}/publish")
    def publish(window_id: str, request: Request):
        require_teacher(request)
        return window_json(engine.publish(window_id), teacher=True)

    # -- statistics ---------------------------------------------------------

    def parse_range(from_: str | None, to: str | None):
        if from_ is None and to is None:
            return None
        return (parse_iso(from_) if from_ else None,
                parse_iso(to) if to else None)

    @app.get("/api/windows/{window_id}/stats")
    async def window_stats(window_id: str, request: Request,
                           include_live: bool = False,
                           from_: str | None = Query(None, alias="from"),
                           to: str | None = None,
                           wait_version: int | None = None,
                           timeout_ms: int = 25_000):
        require_teacher(request)
        engine.get_window(window_id)
        if wait_version is not None:
            # long-poll fallback: return when counts move past wait_version;
            # the timeout is transport-level, so it uses wall time
            import time as _time
            deadline = _time.monotonic() + min(timeout_ms, 60_000) / 1000
            while (engine.window_version(window_id) <= wait_version
                   and _time.monotonic() < deadline
                   and engine.windows[window_id].state != CLOSED):
                await asyncio.sleep(0.05)
        flt = StatsFilter(window_id=window_id, include_live=include_live,
                          time_range=parse_range(from_, to))
        stats = engine.tabulate(flt)
        window = engine.get_window(window_id)
        return stats_json(stats, version=engine.window_version(window_id),
                          final=window.state == CLOSED)

    @app.get("/api/stats/compare")
    def stats_compare(left: str, right: str, request: Request):
        require_teacher(request)
        lf = StatsFilter.from_json(json.loads(urllib.parse.unquote(left)))
        rf = StatsFilter.from_json(json.loads(urllib.parse.unquote(right)))
        comparison = engine.compare(lf, rf)
        return {
            "left": comparison.left.to_json(),
            "right": comparison.right.to_json(),
            "rows": [
                {
                    "question_id": row.question_id,
                    "option_id": row.option_id,
                    "aligned": row.aligned,
                    "count_left": row.count_left,
                    "count_right": row.count_right,
                    "fraction_left": float(row.fraction_left)
                    if row.fraction_left is not None else None,
                    "fraction_right": float(row.fraction_right)
                    if row.fraction_right is not None else None,
                    "fraction_delta": float(row.fraction_delta)
                    if row.fraction_delta is not None else None,
                }
                for row in comparison.rows
            ],
        }

    @app.get("/api/windows/{window_id}/stats.csv")
    def window_stats_csv(window_id: str, request: Request,
                         include_live: bool = False):
        require_teacher(request)
        stats = engine.tabulate(StatsFilter(window_id=window_id,
                                            include_live=include_live))
        return Response(content=export_csv(stats), media_type="text/csv")

    @app.get("/api/windows/{window_id}/stats/stream")
    async def stats_stream(window_id: str, request: Request):
        require_teacher(request)
        engine.get_window(window_id)
        interval = config.refresh_interval_ms / 1000

        async def gen():
            last_version: int | None = None
            while True:
                window = engine.get_window(window_id)
                final = window.state == CLOSED
                version = engine.window_version(window_id)
                if version != last_version:
                    stats = engine.tabulate(
                        StatsFilter(window_id=window_id, include_live=True))
                    payload = stats_json(stats, version=version, final=final)
                    if final:
                        payload["csv"] = export_csv(stats).decode()
                    yield f"data: {json.dumps(payload)}\n\n"
                    last_version = version
                if final:
                    return
                await asyncio.sleep(interval)

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.get("/api/windows/{window_id}/results")
    def results(window_id: str, request: Request):
        # read-only results for participants once the teacher publishes
        token = request.headers.get("x-participant-token") or \
            request.query_params.get("token")
        sessions.participant(token)
        window = engine.get_window(window_id)
        if not window.published:
            raise NotPublishedError("results are not published")
        stats = engine.tabulate(StatsFilter(window_id=window_id, include_live=True))
        return stats_json(stats, final=window.state == CLOSED)

    # -- static UI ----------------------------------------------------------

    def _page(name: str) -> Response:
        if config.static_dir:
            page = Path(config.static_dir) / name
            if page.exists():
                return FileResponse(page)
        return HTMLResponse(_PLACEHOLDER)

    @app.get("/")
    def student_pad():
        return _page("index.html")

    @app.get("/teach")
    def teacher_console():
        return _page("teach.html")

    @app.get("/assets/{path:path}")
    def assets(path: str):
        if config.static_dir:
            target = (Path(config.static_dir) / "assets" / path).resolve()
            root = (Path(config.static_dir) / "assets").resolve()
            if target.is_file() and root in target.parents:
                return FileResponse(target)
        return HTMLResponse(status_code=404, content="not found")

    return app


def main(argv: list[str] | None = None) -> int:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="arsserve",
                                     description="audience response service")
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--hash-password", action="store_true",
                        help="prompt for a password, print its hash, exit")
    args = parser.parse_args(argv)

    if args.hash_password:
        print(hash_password(getpass.getpass("teacher password: ")))
        return 0

    config = load_config(args.config)
    if not config.teacher_password_hash:
        parser.error("TEACHER_PASSWORD_HASH is not configured "
                     "(generate one with --hash-password)")
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
