"""HTTP facade for the wearable UI: sessions, graph metadata, vitals
ingestion, questionnaire scoring, and a per-session event stream.

Every state-changing handler runs the bus to quiescence before responding,
so a client that POSTs and then reads its event stream always sees the
consequences of its own write. Event sequence numbers are gapless per
session, which lets a dropped stream reconnect with ?since= or the
Last-Event-ID header without losing or repeating events.
"""

from __future__ import annotations

import asyncio
import json
import threading
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Header, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, ValidationError

from .bus import Envelope, MessageKind
from .model import Graph, UnknownNodeError
from .runtime import Runtime, ScriptError
from .session import (InvalidActionError, InvalidEntryError, Session,
                      SessionError, UnknownSessionError)
from .situation import AnswerDomainError, Questionnaire, QuestionnaireError
from .validate import GraphStats, Severity, stats, validate
from .vitals import (CsvFormatError, NonMonotoneTimestampError, VitalsRecord,
                     parse_csv)


class GraphNotServableError(RuntimeError):
    def __init__(self, findings):
        super().__init__(
            f"graph has {len(findings)} error-severity findings")
        self.findings = findings


@dataclass(frozen=True)
class ApiEvent:
    seq: int
    type: str  # prompt | warning | situation | audit | stopped
    body: dict

    def sse(self) -> str:
        data = json.dumps(self.body, ensure_ascii=False)
        return f"id: {self.seq}\nevent: {self.type}\ndata: {data}\n\n"


class UiGateway:
    """Drains the ui queue into per-session, gaplessly numbered buffers."""

    def __init__(self, runtime: Runtime):
        self.runtime = runtime
        self._lock = threading.Lock()
        self._buffers: dict[str, list[ApiEvent]] = {}

    def pump(self) -> None:
        envelopes = self.runtime.poll_ui()
        if not envelopes:
            return
        with self._lock:
            for envelope in envelopes:
                mapped = self._map(envelope)
                if mapped is None:
                    continue
                session_id, event_type, body = mapped
                buffer = self._buffers.setdefault(session_id, [])
                buffer.append(ApiEvent(seq=len(buffer) + 1, type=event_type,
                                       body=body))

    @staticmethod
    def _map(envelope: Envelope) -> Optional[tuple[str, str, dict]]:
        payload = envelope.payload
        session_id = payload.get("session_id")
        if session_id is None:
            return None
        if envelope.kind is MessageKind.PROMPT_UPDATE:
            return session_id, "prompt", payload
        if envelope.kind is MessageKind.WARNING:
            return session_id, "warning", payload
        if envelope.kind is MessageKind.SITUATION_UPDATE:
            return session_id, "situation", payload
        if envelope.kind is MessageKind.SESSION_CONTROL:
            action = payload.get("action")
            if action == "audit":
                return session_id, "audit", payload
            if action == "stopped":
                return session_id, "stopped", payload
        return None

    def events_after(self, session_id: str, cursor: int) -> list[ApiEvent]:
        with self._lock:
            buffer = self._buffers.get(session_id, [])
            return [event for event in buffer if event.seq > cursor]


class SessionCreate(BaseModel):
    patient_id: str
    entry: str


class DecisionBody(BaseModel):
    choice: str


class ConfirmBody(BaseModel):
    approve: bool = True


class JumpBody(BaseModel):
    target: str


class VitalsBody(BaseModel):
    patient_id: str
    parameter: str
    reading: float
    unit: str = ""
    timestamp_ms: int


class QuestionnaireBody(BaseModel):
    answers: dict
    patient_id: Optional[str] = None
    session_id: Optional[str] = None


def _session_view(session: Session) -> dict:
    return {"session_id": session.session_id,
            "patient_id": session.patient_id,
            "status": session.status.value,
            "current": session.current,
            "path_label": session.current_path_label,
            "prompt": session.pending.to_payload() if session.pending else None}


def create_app(graph: Graph, *, questionnaire: Optional[Questionnaire] = None,
               manifest: Optional[GraphStats] = None,
               max_age: float = 300.0, clock=None) -> FastAPI:
    findings = [f for f in validate(graph) if f.severity is Severity.ERROR]
    if findings:
        raise GraphNotServableError(findings)

    runtime = Runtime(graph, simulation=False, clock=clock, max_age=max_age,
                      hold_vitals=True, questionnaire=questionnaire)
    gateway = UiGateway(runtime)
    app = FastAPI(title="treatment-path service")
    # the display may be served from a different local port than the API
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.runtime = runtime
    app.state.gateway = gateway
    app.state.manifest = manifest

    def settle() -> None:
        runtime.drain()
        gateway.pump()

    def get_session(session_id: str) -> Session:
        try:
            return runtime.engine.session(session_id)
        except UnknownSessionError:
            raise HTTPException(404, f"unknown session {session_id!r}")

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreate):
        try:
            session = runtime.engine.create_session(body.patient_id,
                                                    body.entry)
        except UnknownNodeError as exc:
            raise HTTPException(404, f"unknown entry node {exc.node_id!r}")
        except InvalidEntryError as exc:
            raise HTTPException(422, str(exc))
        settle()
        return _session_view(session)

    @app.get("/sessions")
    def list_sessions():
        return [{"session_id": s.session_id, "patient_id": s.patient_id,
                 "status": s.status.value, "current": s.current}
                for s in runtime.engine.list_sessions()]

    @app.get("/sessions/{session_id}/prompt")
    def get_prompt(session_id: str):
        return _session_view(get_session(session_id))

    @app.post("/sessions/{session_id}/decision")
    def post_decision(session_id: str, body: DecisionBody):
        session = get_session(session_id)
        try:
            runtime.engine.submit_decision(session.session_id, body.choice)
        except InvalidActionError as exc:
            raise HTTPException(409, str(exc))
        settle()
        return _session_view(session)

    @app.post("/sessions/{session_id}/confirm")
    def post_confirm(session_id: str, body: ConfirmBody):
        session = get_session(session_id)
        try:
            runtime.engine.confirm(session.session_id, body.approve)
        except InvalidActionError as exc:
            raise HTTPException(409, str(exc))
        settle()
        return _session_view(session)

    @app.post("/sessions/{session_id}/jump")
    def post_jump(session_id: str, body: JumpBody):
        session = get_session(session_id)
        try:
            runtime.engine.jump(session.session_id, body.target)
        except UnknownNodeError as exc:
            raise HTTPException(404, f"unknown node {exc.node_id!r}")
        except InvalidActionError as exc:
            raise HTTPException(409, str(exc))
        settle()
        return _session_view(session)

    @app.get("/sessions/{session_id}/info")
    def get_info(session_id: str):
        session = get_session(session_id)
        try:
            items = runtime.engine.request_additional_info(session.session_id)
        except InvalidActionError as exc:
            raise HTTPException(409, str(exc))
        settle()
        return {"session_id": session.session_id, "items": items}

    @app.post("/sessions/{session_id}/stop")
    def post_stop(session_id: str):
        session = get_session(session_id)
        runtime.engine.stop_session(session.session_id)
        settle()
        return _session_view(session)

    @app.get("/sessions/{session_id}/audit")
    def get_audit(session_id: str):
        session = get_session(session_id)
        return runtime.engine.export_audit(session.session_id)

    @app.get("/sessions/{session_id}/events")
    async def get_events(session_id: str,
                         since: Optional[int] = Query(default=None),
                         follow: bool = Query(default=True),
                         timeout: float = Query(default=30.0),
                         last_event_id: Optional[str] =
                         Header(default=None, alias="Last-Event-ID")):
        get_session(session_id)
        cursor = since
        if cursor is None and last_event_id is not None:
            try:
                cursor = int(last_event_id)
            except ValueError:
                cursor = 0
        if cursor is None:
            cursor = 0

        async def stream():
            position = cursor
            waited = 0.0
            while True:
                gateway.pump()
                batch = gateway.events_after(session_id, position)
                for event in batch:
                    position = event.seq
                    yield event.sse()
                    if event.type == "stopped":
                        return
                if not follow:
                    return
                if batch:
                    waited = 0.0
                else:
                    waited += 0.05
                    if waited >= timeout:
                        return
                    await asyncio.sleep(0.05)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/graph/stats")
    def graph_stats():
        return stats(graph).to_dict()

    @app.get("/graph/entries")
    def graph_entries():
        points = graph.entry_points()
        as_ref = lambda n: {"id": n.id, "name": n.name}
        return {"start": as_ref(points.start),
                "bprs": [as_ref(n) for n in points.bprs],
                "saas": [as_ref(n) for n in points.saas],
                "disease_groups": [as_ref(n) for n in points.disease_groups]}

    @app.post("/vitals")
    async def post_vitals(request: Request):
        content_type = request.headers.get("content-type", "")
        raw = await request.body()
        try:
            if "json" in content_type:
                body = VitalsBody.model_validate_json(raw)
                record = VitalsRecord(patient_id=body.patient_id,
                                      parameter=body.parameter,
                                      reading=body.reading, unit=body.unit,
                                      timestamp_ms=body.timestamp_ms)
                runtime.middleware.ingest(record)
                ingested = 1
            else:
                records = parse_csv(raw.decode("utf-8"))
                for record in records:
                    runtime.middleware.ingest(record)
                ingested = len(records)
        except NonMonotoneTimestampError as exc:
            raise HTTPException(409, str(exc))
        except (CsvFormatError, ValidationError, UnicodeDecodeError) as exc:
            raise HTTPException(422, str(exc))
        settle()
        return {"ingested": ingested,
                "record_count": runtime.store.record_count()}

    @app.get("/vitals/stats")
    def vitals_stats():
        return {"record_count": runtime.store.record_count()}

    @app.post("/sd/questionnaire")
    def post_questionnaire(body: QuestionnaireBody):
        try:
            result = runtime.submit_questionnaire(
                body.answers, patient_id=body.patient_id,
                session_id=body.session_id)
        except AnswerDomainError as exc:
            raise HTTPException(422, str(exc))
        except (QuestionnaireError, ScriptError) as exc:
            raise HTTPException(422, str(exc))
        gateway.pump()
        return result

    return app
