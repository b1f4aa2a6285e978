"""Guided treatment sessions: one state machine per patient over a shared
immutable graph.

A session walks path edges, prompting at every node; nothing advances
without an explicit action, except Bpr/Saa/DiseaseGroup header nodes which
auto-advance along their rank-1 edge (logged as auto entries). Decision
nodes with a d_type request the named vital from the middleware and turn
the answer into a suggested branch that still needs confirmation, unless
the engine runs in simulation mode (deterministic replay).

Every position change appends one audit entry; the audit is append-only
with strictly increasing timestamps.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

from .bus import MessageKind
from .model import (ENTRY_KINDS, HUB_KINDS, Graph, Node, NodeKind,
                    StructuralError, UnknownNodeError)
from .vitals import ValueRequest, ValueResponse


class SessionError(RuntimeError):
    pass


class UnknownSessionError(KeyError):
    pass


class InvalidEntryError(ValueError):
    """Entry node exists but is not a Start/Bpr/DiseaseGroup node."""


class InvalidActionError(SessionError):
    """Action does not fit the session's current status or prompt."""


class SessionStatus(str, Enum):
    ACTIVE = "active"
    AWAITING_DECISION = "awaiting_decision"
    AWAITING_VALUE = "awaiting_value"
    AWAITING_PATH_CONFIRMATION = "awaiting_path_confirmation"
    STOPPED = "stopped"


class PromptKind(str, Enum):
    BINARY = "binary"
    MULTI_CHOICE = "multi_choice"
    ACKNOWLEDGE = "acknowledge"
    VALUE_CONFIRMATION = "value_confirmation"
    PATH_CHANGE_CONFIRMATION = "path_change_confirmation"


@dataclass(frozen=True)
class PromptOption:
    key: str
    target: str
    label: str


@dataclass(frozen=True)
class AttachedValue:
    parameter: str
    reading: float
    unit: Optional[str]
    in_range: Optional[bool]
    stale: bool = False

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "reading": self.reading,
                "unit": self.unit, "in_range": self.in_range,
                "stale": self.stale}


@dataclass(frozen=True)
class Prompt:
    node_id: str
    node_kind: str
    kind: PromptKind
    title: str
    options: tuple[PromptOption, ...]
    suggested: Optional[str] = None
    info_available: bool = False
    attached_value: Optional[AttachedValue] = None
    invasive: bool = False
    linked_procedures: tuple[tuple[str, str], ...] = ()

    def option(self, key: str) -> Optional[PromptOption]:
        for candidate in self.options:
            if candidate.key == key:
                return candidate
        return None

    def to_payload(self) -> dict:
        return {
            "node": self.node_id,
            "node_kind": self.node_kind,
            "kind": self.kind.value,
            "title": self.title,
            "options": [{"key": o.key, "target": o.target, "label": o.label}
                        for o in self.options],
            "suggested": self.suggested,
            "info_available": self.info_available,
            "attached_value": self.attached_value.to_dict()
            if self.attached_value else None,
            "invasive": self.invasive,
            "linked_procedures": [{"target": t, "name": n}
                                  for t, n in self.linked_procedures],
        }


@dataclass(frozen=True)
class AuditEntry:
    seq: int
    ts: float
    node_id: str
    action: str  # created|auto|choice|acknowledge|confirmed|jump|info|stop
    prompt_kind: Optional[str] = None
    choice: Optional[str] = None
    target: Optional[str] = None
    value: Optional[AttachedValue] = None

    def to_dict(self) -> dict:
        out = {"seq": self.seq, "ts": self.ts, "node": self.node_id,
               "action": self.action}
        if self.prompt_kind is not None:
            out["prompt_kind"] = self.prompt_kind
        if self.choice is not None:
            out["choice"] = self.choice
        if self.target is not None:
            out["to"] = self.target
        if self.value is not None:
            out["value"] = self.value.to_dict()
        return out


@dataclass
class _PendingMove:
    action: str
    choice: Optional[str]
    target: str
    value: Optional[AttachedValue]
    prior_prompt: Optional[Prompt]
    prior_status: SessionStatus


@dataclass
class Session:
    session_id: str
    patient_id: str
    current: str
    status: SessionStatus
    simulation: bool
    pending: Optional[Prompt] = None
    pending_request: Optional[ValueRequest] = None
    current_path_label: Optional[str] = None
    audit: list[AuditEntry] = field(default_factory=list)
    _pending_move: Optional[_PendingMove] = None
    _watching: Optional[str] = None
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)


class SessionEngine:
    """Holds many sessions; operations on different sessions may run
    concurrently, each session is single-writer via its own lock."""

    def __init__(self, graph: Graph, clock: Callable[[], float] = time.time,
                 simulation: bool = False,
                 emit: Optional[Callable[[MessageKind, str, dict], None]] = None):
        self.graph = graph
        self.clock = clock
        self.simulation = simulation
        self.emit = emit
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self._counter = 0
        self._hub_target_kinds = {
            target_kind for hub_kind, (target_kind, _) in HUB_KINDS.items()
            if graph.nodes_of_kind(hub_kind)
        }

    # -- session registry ---------------------------------------------------

    def create_session(self, patient_id: str, entry: str) -> Session:
        node = self.graph.node(entry)
        if node.kind not in ENTRY_KINDS:
            raise InvalidEntryError(
                f"entry must be a start, bpr or diseaseGroup node, "
                f"{entry!r} is {node.kind.value}")
        with self._registry_lock:
            self._counter += 1
            session = Session(session_id=f"s{self._counter}",
                              patient_id=patient_id, current=entry,
                              status=SessionStatus.ACTIVE,
                              simulation=self.simulation,
                              current_path_label=node.path_label())
            self._sessions[session.session_id] = session
        with session._lock:
            self._log(session, "created", entry)
            self._enter(session)
        return session

    def session(self, session_id: str) -> Session:
        found = self._sessions.get(session_id)
        if found is None:
            raise UnknownSessionError(session_id)
        return found

    def list_sessions(self) -> list[Session]:
        with self._registry_lock:
            return list(self._sessions.values())

    # -- operator actions ---------------------------------------------------

    def submit_decision(self, session_id: str, choice: str) -> Session:
        session = self.session(session_id)
        with session._lock:
            if (session.status is not SessionStatus.AWAITING_DECISION
                    or session.pending is None):
                raise InvalidActionError(
                    f"session {session_id} is {session.status.value}, "
                    "not awaiting a decision")
            option = session.pending.option(choice)
            if option is None:
                raise InvalidActionError(
                    f"choice {choice!r} is not among the current options")
            node = self.graph.node(session.current)
            if node.kind in HUB_KINDS:
                return self._begin_move(session, "jump", None, option.target,
                                        None)
            prompt = session.pending
            if prompt.kind is PromptKind.VALUE_CONFIRMATION:
                action = "confirmed" if choice == prompt.suggested else "choice"
                return self._begin_move(session, action, choice,
                                        option.target, prompt.attached_value)
            if prompt.kind is PromptKind.ACKNOWLEDGE:
                return self._begin_move(session, "acknowledge", None,
                                        option.target, None)
            return self._begin_move(session, "choice", choice, option.target,
                                    None)

    def confirm(self, session_id: str, approve: bool = True) -> Session:
        """Resolve a pending path-change or value confirmation."""
        session = self.session(session_id)
        with session._lock:
            if session.status is SessionStatus.AWAITING_PATH_CONFIRMATION:
                move = session._pending_move
                session._pending_move = None
                if approve:
                    return self._move(session, move.action, move.choice,
                                      move.target, move.value)
                session.pending = move.prior_prompt
                session.status = move.prior_status
                self._emit_prompt(session)
                return session
            if (session.status is SessionStatus.AWAITING_DECISION
                    and session.pending is not None
                    and session.pending.kind is PromptKind.VALUE_CONFIRMATION):
                if approve:
                    if session.pending.suggested is None:
                        raise InvalidActionError("no suggested branch to confirm")
                    return self.submit_decision(session_id,
                                                session.pending.suggested)
                # dismissed suggestion: fall back to a plain decision
                session.pending = replace(session.pending,
                                          kind=PromptKind.BINARY,
                                          suggested=None)
                self._emit_prompt(session)
                return session
            raise InvalidActionError(
                f"session {session_id} has nothing to confirm")

    def apply_value(self, session_id: str, response: ValueResponse) -> Session:
        session = self.session(session_id)
        with session._lock:
            request = session.pending_request
            if (session.status is not SessionStatus.AWAITING_VALUE
                    or request is None):
                raise InvalidActionError(
                    f"session {session_id} is not awaiting a value")
            if response.parameter != request.parameter:
                raise SessionError(
                    f"response for {response.parameter!r} does not match "
                    f"requested {request.parameter!r}")
            node = self.graph.node(session.current)
            session.pending_request = None
            if response.freshness == "unavailable" or response.reading is None:
                # sensor gap: degrade to a manual decision
                session.pending = self._decision_prompt(node)
                session.status = SessionStatus.AWAITING_DECISION
                self._emit_prompt(session)
                return session
            attached = AttachedValue(parameter=response.parameter,
                                     reading=response.reading,
                                     unit=response.unit,
                                     in_range=response.in_range,
                                     stale=response.freshness == "stale")
            suggested = None
            if response.in_range is not None:
                branch_true = node.range_branch or "yes"
                branch_false = "no" if branch_true == "yes" else "yes"
                suggested = branch_true if response.in_range else branch_false
            base = self._decision_prompt(node)
            session.pending = replace(base,
                                      kind=PromptKind.VALUE_CONFIRMATION,
                                      suggested=suggested,
                                      attached_value=attached)
            session.status = SessionStatus.AWAITING_DECISION
            if session.simulation and suggested is not None:
                return self.submit_decision(session_id, suggested)
            self._emit_prompt(session)
            return session

    def jump(self, session_id: str, target: str) -> Session:
        session = self.session(session_id)
        with session._lock:
            if session.status is SessionStatus.STOPPED:
                raise InvalidActionError(f"session {session_id} is stopped")
            if session.status is SessionStatus.AWAITING_PATH_CONFIRMATION:
                raise InvalidActionError(
                    "resolve the pending path confirmation first")
            target_node = self.graph.node(target)
            if not self._jump_allowed(session.current, target_node):
                raise InvalidActionError(
                    f"{target!r} is not jump-reachable from "
                    f"{session.current!r}")
            return self._begin_move(session, "jump", None, target, None)

    def _jump_allowed(self, current: str, target_node: Node) -> bool:
        links = self.graph.related_links(current)
        linked = {node.id for _, node in
                  links.bpr + links.saa + links.association}
        if target_node.id in linked:
            return True
        # hubs give every Bpr/Saa node a global shortcut
        return target_node.kind in self._hub_target_kinds

    def request_additional_info(self, session_id: str) -> list[dict]:
        session = self.session(session_id)
        with session._lock:
            if session.status is SessionStatus.STOPPED:
                raise InvalidActionError(f"session {session_id} is stopped")
            items = [{"node": node.id, "kind": node.kind.value,
                      "name": node.name}
                     for _, node in
                     self.graph.related_links(session.current).additional_info]
            self._log(session, "info", session.current)
            return items

    def stop_session(self, session_id: str) -> Session:
        session = self.session(session_id)
        with session._lock:
            if session.status is SessionStatus.STOPPED:
                return session
            self._log(session, "stop", session.current)
            self._finish(session)
            return session

    def export_audit(self, session_id: str) -> dict:
        session = self.session(session_id)
        with session._lock:
            return {"session_id": session.session_id,
                    "patient_id": session.patient_id,
                    "status": session.status.value,
                    "entries": [entry.to_dict() for entry in session.audit]}

    # -- state machine internals --------------------------------------------

    def _begin_move(self, session: Session, action: str,
                    choice: Optional[str], target: str,
                    value: Optional[AttachedValue]) -> Session:
        target_label = self.graph.node(target).path_label()
        leaving = (target_label is not None
                   and session.current_path_label is not None
                   and target_label != session.current_path_label)
        if leaving and not session.simulation:
            session._pending_move = _PendingMove(
                action=action, choice=choice, target=target, value=value,
                prior_prompt=session.pending, prior_status=session.status)
            session.status = SessionStatus.AWAITING_PATH_CONFIRMATION
            session.pending = Prompt(
                node_id=session.current,
                node_kind=self.graph.node(session.current).kind.value,
                kind=PromptKind.PATH_CHANGE_CONFIRMATION,
                title=f"Behandlungspfad wechseln zu {target_label}?",
                options=(
                    PromptOption("confirm", target,
                                 self.graph.node(target).name),
                    PromptOption("cancel", session.current,
                                 "Im aktuellen Pfad bleiben"),
                ))
            self._emit_prompt(session)
            return session
        return self._move(session, action, choice, target, value)

    def _move(self, session: Session, action: str, choice: Optional[str],
              target: str, value: Optional[AttachedValue]) -> Session:
        prompt_kind = session.pending.kind.value if session.pending else None
        self._log(session, action, session.current, prompt_kind=prompt_kind,
                  choice=choice, target=target, value=value)
        session.current = target
        session.pending = None
        session.pending_request = None
        session.status = SessionStatus.ACTIVE
        self._enter(session)
        return session

    def _enter(self, session: Session) -> None:
        while True:
            node = self.graph.node(session.current)
            label = node.path_label()
            if label is not None:
                session.current_path_label = label
            if node.kind is NodeKind.STOP:
                self._log(session, "stop", node.id)
                self._finish(session)
                return
            if node.kind in (NodeKind.BPR, NodeKind.SAA,
                             NodeKind.DISEASE_GROUP):
                ordered = self.graph.out_edges_ordered(node.id)
                if not ordered:
                    raise StructuralError(
                        f"header node {node.id} has no path edge")
                _, target = ordered[0]
                self._log(session, "auto", node.id, target=target.id)
                session.current = target.id
                continue
            self._update_watch(session, node)
            if node.kind is NodeKind.DECISION_YN and node.d_type is not None:
                session.status = SessionStatus.AWAITING_VALUE
                session.pending = None
                session.pending_request = ValueRequest(
                    session_id=session.session_id,
                    patient_id=session.patient_id,
                    parameter=node.value, min=node.min, max=node.max)
                self._send(MessageKind.VALUE_REQUEST, "middleware", {
                    "session_id": session.session_id,
                    "patient_id": session.patient_id,
                    "parameter": node.value,
                    "min": node.min, "max": node.max,
                })
                return
            session.pending = self._build_prompt(node)
            session.status = SessionStatus.AWAITING_DECISION
            self._emit_prompt(session)
            return

    def _build_prompt(self, node: Node) -> Prompt:
        if node.kind in HUB_KINDS:
            _, link_kind = HUB_KINDS[node.kind]
            grouped = self.graph.related_links(node.id)
            targets = {"bpr": grouped.bpr, "saa": grouped.saa,
                       "association": grouped.association}[link_kind.value]
            options = tuple(
                PromptOption(str(i + 1), target.id, target.name)
                for i, (_, target) in enumerate(targets))
            return Prompt(node_id=node.id, node_kind=node.kind.value,
                          kind=PromptKind.MULTI_CHOICE, title=node.name,
                          options=options)
        return self._decision_prompt(node)

    def _decision_prompt(self, node: Node) -> Prompt:
        ordered = self.graph.out_edges_ordered(node.id)
        if not ordered:
            raise StructuralError(
                f"node {node.id} ({node.kind.value}) has no path edge and "
                "is not a stop node")
        links = self.graph.related_links(node.id)
        info_available = bool(links.additional_info)
        linked = tuple((target.id, target.name) for _, target in links.saa)
        if node.kind is NodeKind.DECISION_YN:
            options = tuple(PromptOption(edge.kind.value, target.id,
                                         target.name)
                            for edge, target in ordered)
            return Prompt(node_id=node.id, node_kind=node.kind.value,
                          kind=PromptKind.BINARY, title=node.name,
                          options=options, info_available=info_available,
                          linked_procedures=linked)
        if node.kind in (NodeKind.DECISION_OR, NodeKind.START) or len(ordered) > 1:
            options = tuple(PromptOption(str(i + 1), target.id, target.name)
                            for i, (_, target) in enumerate(ordered))
            return Prompt(node_id=node.id, node_kind=node.kind.value,
                          kind=PromptKind.MULTI_CHOICE, title=node.name,
                          options=options, info_available=info_available,
                          linked_procedures=linked)
        _, target = ordered[0]
        return Prompt(node_id=node.id, node_kind=node.kind.value,
                      kind=PromptKind.ACKNOWLEDGE, title=node.name,
                      options=(PromptOption("ok", target.id, target.name),),
                      info_available=info_available,
                      invasive=node.kind is NodeKind.INVASIVE_PROCEDURE,
                      linked_procedures=linked)

    def _finish(self, session: Session) -> None:
        session.status = SessionStatus.STOPPED
        session.pending = None
        session.pending_request = None
        session._pending_move = None
        if session._watching is not None:
            self._send(MessageKind.SESSION_CONTROL, "middleware",
                       {"action": "unwatch",
                        "session_id": session.session_id})
            session._watching = None
        self._send(MessageKind.SESSION_CONTROL, "ui",
                   {"action": "stopped", "session_id": session.session_id})

    def _update_watch(self, session: Session, node: Node) -> None:
        wanted = (node.value is not None
                  and (node.min is not None or node.max is not None))
        if wanted:
            session._watching = node.value
            self._send(MessageKind.SESSION_CONTROL, "middleware", {
                "action": "watch", "session_id": session.session_id,
                "patient_id": session.patient_id, "parameter": node.value,
                "min": node.min, "max": node.max,
            })
        elif session._watching is not None:
            session._watching = None
            self._send(MessageKind.SESSION_CONTROL, "middleware", {
                "action": "unwatch", "session_id": session.session_id,
            })

    def _log(self, session: Session, action: str, node_id: str,
             prompt_kind: Optional[str] = None, choice: Optional[str] = None,
             target: Optional[str] = None,
             value: Optional[AttachedValue] = None) -> None:
        now = self.clock()
        if session.audit:
            now = max(now, session.audit[-1].ts + 1e-6)
        entry = AuditEntry(seq=len(session.audit), ts=now, node_id=node_id,
                           action=action, prompt_kind=prompt_kind,
                           choice=choice, target=target, value=value)
        session.audit.append(entry)
        self._send(MessageKind.SESSION_CONTROL, "ui", {
            "action": "audit", "session_id": session.session_id,
            "entry": entry.to_dict(),
        })

    def _emit_prompt(self, session: Session) -> None:
        if session.pending is None:
            return
        self._send(MessageKind.PROMPT_UPDATE, "ui", {
            "session_id": session.session_id,
            "status": session.status.value,
            "prompt": session.pending.to_payload(),
        })

    def _send(self, kind: MessageKind, target: str, payload: dict) -> None:
        if self.emit is not None:
            self.emit(kind, target, payload)
