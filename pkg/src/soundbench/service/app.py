"""HTTP service that runs listening-test sessions from a sealed plan."""

from __future__ import annotations

import hmac
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..trials.plan import PlanBundle, SessionPlan
from .schemas import ResponseAck, ResponseIn, SessionCreate, SessionInfo, TrialOut
from .storage import RatingsLog, SessionStore

LOG_FILE = "ratings.jsonl"
SNAPSHOT_FILE = "sessions.json"


@dataclass
class ServiceConfig:
    plan: PlanBundle
    data_dir: str
    admin_token: str
    rater_teams: dict[str, str] = field(default_factory=dict)
    audio_root: str = ""  # prefix for relative clip paths
    static_dir: str = ""  # optional frontend bundle to serve at /
    unseal: bool = False  # export resolves system_id/anchor per record


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _parse_range(header: str, size: int) -> tuple[int, int] | None:
    """First satisfiable byte range from a Range header, or None to serve
    the full body. Raises 416 when the range is syntactically fine but
    unsatisfiable."""
    if not header.startswith("bytes="):
        return None
    spec = header[len("bytes=") :].split(",")[0].strip()
    if "-" not in spec:
        return None
    start_s, end_s = spec.split("-", 1)
    try:
        if start_s == "":
            suffix = int(end_s)
            if suffix <= 0:
                raise ValueError
            start = max(size - suffix, 0)
            end = size - 1
        else:
            start = int(start_s)
            end = int(end_s) if end_s else size - 1
    except ValueError:
        return None
    if start >= size or end < start:
        raise HTTPException(
            status_code=416,
            detail="range not satisfiable",
            headers={"Content-Range": f"bytes */{size}"},
        )
    return start, min(end, size - 1)


def create_app(config: ServiceConfig) -> FastAPI:
    os.makedirs(config.data_dir, exist_ok=True)
    log = RatingsLog(os.path.join(config.data_dir, LOG_FILE))
    store = SessionStore(
        snapshot_path=os.path.join(config.data_dir, SNAPSHOT_FILE),
        log_path=log.path,
    )

    plans_by_id: dict[str, SessionPlan] = config.plan.session_by_id()
    plans_by_pair = config.plan.session_by_pair()
    trial_index = {
        sid: {t.trial_id: i for i, t in enumerate(plan.trials)}
        for sid, plan in plans_by_id.items()
    }
    audio_paths = config.plan.audio_map()
    token_session = {
        t.clip_token: plan.session_id
        for plan in config.plan.sessions
        for t in plan.trials
        if t.clip_token
    }
    submit_lock = threading.Lock()

    app = FastAPI(title="soundbench rating service")

    def _session_info(plan: SessionPlan) -> SessionInfo:
        state = store.get(plan.session_id)
        return SessionInfo(
            session_id=plan.session_id,
            rater_id=plan.rater_id,
            category=plan.category,
            kind=plan.kind,
            state=state.state(len(plan.trials)),
            cursor=state.cursor,
            trial_count=len(plan.trials),
        )

    @app.post("/api/sessions", response_model=SessionInfo)
    def create_session(body: SessionCreate) -> SessionInfo:
        plan = plans_by_pair.get((body.rater_id, body.category))
        if plan is None:
            raise HTTPException(
                status_code=404,
                detail=f"no session plan for rater {body.rater_id!r} "
                f"and category {body.category!r}",
            )
        store.create(plan.session_id)
        return _session_info(plan)

    @app.get("/api/sessions/{session_id}", response_model=SessionInfo)
    def session_status(session_id: str) -> SessionInfo:
        plan = plans_by_id.get(session_id)
        if plan is None or store.get(session_id) is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return _session_info(plan)

    @app.get("/api/sessions/{session_id}/next", response_model=TrialOut)
    def next_trial(session_id: str) -> TrialOut:
        plan = plans_by_id.get(session_id)
        state = store.get(session_id)
        if plan is None or state is None:
            raise HTTPException(status_code=404, detail="unknown session")
        total = len(plan.trials)
        if state.cursor >= total:
            return TrialOut(kind="done", state="complete", progress=1.0)
        trial = plan.trials[state.cursor]
        return TrialOut(
            kind=trial.kind,
            state="active",
            progress=state.cursor / total,
            trial_id=trial.trial_id,
            position=trial.position,
            audio_url=f"/api/audio/{trial.clip_token}" if trial.clip_token else None,
            scales=list(trial.scales),
        )

    @app.post("/api/sessions/{session_id}/responses", response_model=ResponseAck)
    def submit_response(session_id: str, body: ResponseIn) -> ResponseAck:
        plan = plans_by_id.get(session_id)
        state = store.get(session_id)
        if plan is None or state is None:
            raise HTTPException(status_code=404, detail="unknown session")
        index = trial_index[session_id].get(body.trial_id)
        if index is None:
            raise HTTPException(
                status_code=404, detail=f"unknown trial {body.trial_id!r}"
            )
        payload = {"quality": body.quality, "fit": body.fit, "diversity": body.diversity}

        with submit_lock:
            total = len(plan.trials)
            if index < state.cursor:
                if state.answered.get(body.trial_id) == payload:
                    return ResponseAck(
                        status="duplicate",
                        session_id=session_id,
                        trial_id=body.trial_id,
                        cursor=state.cursor,
                        state=state.state(total),
                    )
                raise HTTPException(
                    status_code=409,
                    detail=f"trial {body.trial_id!r} already answered differently",
                )
            if index > state.cursor:
                expected = plan.trials[state.cursor].trial_id
                raise HTTPException(
                    status_code=409,
                    detail=f"out of order: expected trial {expected!r}, "
                    f"got {body.trial_id!r}",
                )

            trial = plan.trials[index]
            given = tuple(k for k, v in payload.items() if v is not None)
            if given != tuple(trial.scales):
                raise HTTPException(
                    status_code=400,
                    detail=f"trial {body.trial_id!r} expects scales "
                    f"{list(trial.scales)}, got {list(given)}",
                )

            record = {
                "session_id": session_id,
                "rater_id": plan.rater_id,
                "team_id": config.rater_teams.get(plan.rater_id, ""),
                "category": plan.category,
                "trial_id": trial.trial_id,
                "clip_token": trial.clip_token,
                "quality": body.quality,
                "fit": body.fit,
                "diversity": body.diversity,
                "listen_count": body.listen_count,
                "timestamp": _utc_now(),
            }
            log.append(record)  # fsynced before the ack leaves
            store.advance(session_id, trial.trial_id, payload)
            return ResponseAck(
                status="ok",
                session_id=session_id,
                trial_id=trial.trial_id,
                cursor=store.get(session_id).cursor,
                state=store.get(session_id).state(total),
            )

    @app.get("/api/audio/{token}")
    def audio(token: str, request: Request) -> Response:
        path = audio_paths.get(token)
        session_id = token_session.get(token)
        if path is None or session_id is None:
            raise HTTPException(status_code=404, detail="unknown audio token")
        state = store.get(session_id)
        plan = plans_by_id[session_id]
        if state is None or state.cursor >= len(plan.trials):
            # tokens resolve only while their session is active
            raise HTTPException(status_code=404, detail="unknown audio token")
        if config.audio_root and not os.path.isabs(path):
            path = os.path.join(config.audio_root, path)
        if not os.path.exists(path):
            raise HTTPException(status_code=404, detail="audio file missing")

        with open(path, "rb") as fh:
            data = fh.read()
        headers = {"Accept-Ranges": "bytes"}
        range_header = request.headers.get("range")
        if range_header:
            span = _parse_range(range_header, len(data))
            if span is not None:
                start, end = span
                headers["Content-Range"] = f"bytes {start}-{end}/{len(data)}"
                return Response(
                    content=data[start : end + 1],
                    status_code=206,
                    media_type="audio/wav",
                    headers=headers,
                )
        return Response(content=data, media_type="audio/wav", headers=headers)

    @app.get("/api/export")
    def export(token: str = "") -> PlainTextResponse:
        if not config.admin_token or not hmac.compare_digest(
            token, config.admin_token
        ):
            raise HTTPException(status_code=403, detail="bad export token")
        content = ""
        if os.path.exists(log.path):
            with open(log.path, "r", encoding="utf-8") as fh:
                content = fh.read()
        if config.unseal and content:
            sealed_lookup = config.plan.trial_lookup()
            lines = []
            for line in content.splitlines():
                record = json.loads(line)
                trial = sealed_lookup.get((record["session_id"], record["trial_id"]))
                if trial is not None:
                    record["system_id"] = trial.system_id
                    record["anchor"] = trial.anchor
                    record["clip_id"] = trial.clip_id
                lines.append(json.dumps(record, sort_keys=True))
            content = "\n".join(lines) + "\n"
        return PlainTextResponse(content, media_type="application/x-ndjson")

    if config.static_dir:
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="ui")

    app.state.log = log
    app.state.store = store
    return app
