"""Wires engine, middleware, situation scorer and UI queue onto one bus.

The runtime owns the poll loop: drain() repeatedly empties the kg,
middleware and sd queues until the system is quiescent. The ui queue is a
sink consumed by whoever fronts the operator (API gateway, CLI, tests).

Also home of the deterministic replay machinery: a scripted vitals feed
that releases CSV rows on demand, and run_script() which drives a session
through an expectation-checked step list.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .bus import Bus, Envelope, MessageKind
from .ioutil import read_text_or_literal
from .model import Graph
from .session import InvalidActionError, Session, SessionEngine, SessionStatus
from .situation import Questionnaire, load_questionnaire, score
from .vitals import (DEFAULT_MAX_AGE, MiddlewareService, ValueRequest,
                     ValueResponse, VitalsRecord, VitalsStore, parse_csv)

MODULES = ("kg", "middleware", "sd", "ui")


class ScriptError(ValueError):
    pass


class ScriptDivergence(RuntimeError):
    def __init__(self, step: int, expected: str, actual: str, detail: str = ""):
        suffix = f" ({detail})" if detail else ""
        super().__init__(
            f"step {step}: expected node {expected!r}, session at "
            f"{actual!r}{suffix}")
        self.step = step
        self.expected = expected
        self.actual = actual


@dataclass(frozen=True)
class ScriptStep:
    expect: str
    action: str  # choice | ack | jump | stop
    arg: Optional[str] = None


@dataclass(frozen=True)
class SessionScript:
    patient_id: str
    entry: str
    steps: tuple[ScriptStep, ...]


def load_script(source: Union[str, Path]) -> SessionScript:
    try:
        raw = json.loads(read_text_or_literal(source))
    except json.JSONDecodeError as exc:
        raise ScriptError(f"script is not valid JSON: {exc}") from None
    try:
        steps = tuple(
            ScriptStep(expect=step["expect"], action=step["action"],
                       arg=step.get("arg"))
            for step in raw["steps"])
        script = SessionScript(patient_id=raw["patient_id"],
                               entry=raw["entry"], steps=steps)
    except (KeyError, TypeError) as exc:
        raise ScriptError(f"script missing field: {exc}") from None
    for index, step in enumerate(script.steps):
        if step.action not in ("choice", "ack", "jump", "stop"):
            raise ScriptError(f"step {index}: unknown action {step.action!r}")
        if step.action in ("choice", "jump") and not step.arg:
            raise ScriptError(f"step {index}: action {step.action} needs arg")
    return script


class Runtime:
    """One graph, one bus, one middleware, one engine."""

    def __init__(self, graph: Graph, *, simulation: bool = False,
                 clock=None, max_age: float = DEFAULT_MAX_AGE,
                 hold_vitals: bool = True,
                 persist_path: Union[str, Path, None] = None,
                 questionnaire: Optional[Questionnaire] = None):
        self.graph = graph
        self.questionnaire = questionnaire
        self.bus = Bus()
        for module in MODULES:
            self.bus.register(module)
        self.store = VitalsStore(persist_path)
        self.middleware = MiddlewareService(
            self.bus, self.store, max_age=max_age,
            clock=clock or time.time,
            hold_when_unavailable=hold_vitals)
        self.engine = SessionEngine(
            graph, clock=clock or time.time, simulation=simulation,
            emit=lambda kind, target, payload:
                self.bus.send("kg", target, kind, payload))

    def ingest(self, record: VitalsRecord) -> None:
        self.middleware.ingest(record)
        self.drain()

    def ingest_csv(self, text: str) -> int:
        records = parse_csv(text)
        for record in records:
            self.middleware.ingest(record)
        self.drain()
        return len(records)

    def submit_questionnaire(self, answers: dict, patient_id: Optional[str]
                             = None, session_id: Optional[str] = None) -> dict:
        """Score answers plus the patient's latest vitals; the ranking goes
        to the UI as a non-blocking suggestion."""
        if self.questionnaire is None:
            raise ScriptError("no questionnaire configured for this corpus")
        vitals = {}
        if patient_id is not None:
            vitals = {param: record.reading
                      for param, record in self.store.snapshot(patient_id).items()}
        result = score(self.questionnaire, answers, vitals)
        payload = {"ranking": result.ranking, "scores": result.scores}
        if session_id is not None:
            payload["session_id"] = session_id
        self.bus.send("sd", "kg", MessageKind.SITUATION_UPDATE, payload)
        self.drain()
        return payload

    # -- poll loop -----------------------------------------------------------

    def drain(self, budget: int = 10000) -> None:
        for _ in range(budget):
            moved = 0
            for envelope in self.bus.poll("middleware"):
                self.middleware.handle(envelope)
                moved += 1
            for envelope in self.bus.poll("kg"):
                self._handle_kg(envelope)
                moved += 1
            for envelope in self.bus.poll("sd"):
                moved += 1  # nothing routes through sd asynchronously yet
            if not moved:
                return
        raise RuntimeError("bus did not go quiescent within budget")

    def _handle_kg(self, envelope: Envelope) -> None:
        payload = envelope.payload
        if envelope.kind is MessageKind.VALUE_RESPONSE:
            response = ValueResponse(
                session_id=payload["session_id"],
                patient_id=payload["patient_id"],
                parameter=payload["parameter"],
                freshness=payload["freshness"],
                reading=payload.get("reading"),
                unit=payload.get("unit"),
                timestamp_ms=payload.get("timestamp_ms"),
                in_range=payload.get("in_range"))
            try:
                self.engine.apply_value(response.session_id, response)
            except InvalidActionError:
                pass  # session moved on (jump/stop) before the answer landed
        elif envelope.kind is MessageKind.DECISION_SUBMITTED:
            self.engine.submit_decision(payload["session_id"],
                                        payload["choice"])
        elif envelope.kind is MessageKind.SITUATION_UPDATE:
            # recommendation is advisory: surface it, never act on it
            self.bus.send("kg", "ui", MessageKind.SITUATION_UPDATE, payload)

    def poll_ui(self, max_n: int = 256) -> list[Envelope]:
        return self.bus.poll("ui", max_n)


class ScriptedVitalsFeed:
    """Releases CSV rows lazily: each value request pulls rows until the
    requested stream produced one, so scripted readings line up with the
    session's questions regardless of wall-clock time."""

    def __init__(self, runtime: Runtime, source: Union[str, Path]):
        self.records = parse_csv(read_text_or_literal(source))
        self.position = 0
        self.runtime = runtime
        runtime.middleware.pre_answer = self._pull_for
        runtime.middleware.clock = self._clock
        runtime.middleware.hold_when_unavailable = False

    def _clock(self) -> float:
        # freshness judged against feed time, not wall clock
        newest = self.runtime.store.latest_timestamp_ms()
        return 0.0 if newest is None else newest / 1000.0

    def _pull_for(self, request: ValueRequest) -> None:
        while self.position < len(self.records):
            record = self.records[self.position]
            self.position += 1
            self.runtime.middleware.ingest(record)
            if (record.patient_id == request.patient_id
                    and record.parameter == request.parameter):
                return
        # feed exhausted: the answer falls back to whatever is stored


def run_script(runtime: Runtime, script: SessionScript) -> Session:
    """Drive one session through a script, checking each expectation.

    The runtime should be in simulation mode so value and path
    confirmations resolve automatically.
    """
    session = runtime.engine.create_session(script.patient_id, script.entry)
    runtime.drain()
    for index, step in enumerate(script.steps):
        if session.status is SessionStatus.STOPPED:
            if step.action == "stop" and session.current == step.expect:
                continue
            raise ScriptDivergence(index, step.expect, session.current,
                                   "session already stopped")
        if session.current != step.expect:
            raise ScriptDivergence(index, step.expect, session.current)
        try:
            if step.action == "choice":
                runtime.engine.submit_decision(session.session_id, step.arg)
            elif step.action == "ack":
                runtime.engine.submit_decision(session.session_id, "ok")
            elif step.action == "jump":
                runtime.engine.jump(session.session_id, step.arg)
            elif step.action == "stop":
                runtime.engine.stop_session(session.session_id)
        except InvalidActionError as exc:
            raise ScriptDivergence(index, step.expect, session.current,
                                   str(exc)) from None
        runtime.drain()
    return session


def replay(graph: Graph, script: SessionScript,
           vitals_source: Union[str, Path, None] = None) -> Session:
    """Deterministic end-to-end replay: counter clock, scripted vitals."""
    counter = itertools.count()
    runtime = Runtime(graph, simulation=True,
                      clock=lambda: float(next(counter)))
    if vitals_source is not None:
        ScriptedVitalsFeed(runtime, vitals_source)
    else:
        runtime.middleware.hold_when_unavailable = False
    return run_script(runtime, script)
