"""In-process message bus: one named FIFO queue per registered module.

Modules (engine, middleware, situation scorer, UI gateway) exchange typed
envelopes; each consumer periodically polls its own queue. Delivery is
exactly-once and per-sender FIFO; no ordering is promised across senders.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum


class MessageKind(str, Enum):
    VALUE_REQUEST = "ValueRequest"
    VALUE_RESPONSE = "ValueResponse"
    PROMPT_UPDATE = "PromptUpdate"
    DECISION_SUBMITTED = "DecisionSubmitted"
    WARNING = "Warning"
    SITUATION_UPDATE = "SituationUpdate"
    SESSION_CONTROL = "SessionControl"


# Required payload fields per kind. Extra fields are allowed so payloads can
# carry context; missing required fields are rejected at send time.
_REQUIRED_FIELDS: dict[MessageKind, frozenset[str]] = {
    MessageKind.VALUE_REQUEST: frozenset({"session_id", "patient_id", "parameter"}),
    MessageKind.VALUE_RESPONSE: frozenset({"session_id", "patient_id",
                                           "parameter", "freshness"}),
    MessageKind.PROMPT_UPDATE: frozenset({"session_id", "prompt"}),
    MessageKind.DECISION_SUBMITTED: frozenset({"session_id", "choice"}),
    MessageKind.WARNING: frozenset({"session_id", "message"}),
    MessageKind.SITUATION_UPDATE: frozenset({"ranking"}),
    MessageKind.SESSION_CONTROL: frozenset({"action"}),
}


class BusError(RuntimeError):
    pass


class DuplicateModuleError(BusError):
    pass


class UnknownModuleError(BusError):
    pass


class MalformedPayloadError(BusError):
    pass


@dataclass(frozen=True)
class Envelope:
    msg_id: int  # monotone per source module
    source: str
    target: str
    kind: MessageKind
    payload: dict
    sent_at: float = field(compare=False)


class Bus:
    """Thread-safe registry of per-module queues.

    send() may be called from any number of threads; poll() removes a batch
    under the queue lock, so concurrent pollers on one queue each see a
    disjoint slice (exactly-once overall).
    """

    def __init__(self, clock=time.time):
        self._clock = clock
        self._lock = threading.Lock()
        self._queues: dict[str, deque[Envelope]] = {}
        self._sender_seq: dict[str, int] = {}

    def register(self, module: str) -> None:
        with self._lock:
            if module in self._queues:
                raise DuplicateModuleError(f"module {module!r} already registered")
            self._queues[module] = deque()

    def modules(self) -> list[str]:
        with self._lock:
            return sorted(self._queues)

    def send(self, source: str, target: str, kind: MessageKind,
             payload: dict) -> Envelope:
        missing = _REQUIRED_FIELDS[kind] - payload.keys()
        if missing:
            raise MalformedPayloadError(
                f"{kind.value} payload missing {sorted(missing)}")
        with self._lock:
            queue = self._queues.get(target)
            if queue is None:
                raise UnknownModuleError(f"no module registered as {target!r}")
            seq = self._sender_seq.get(source, 0) + 1
            self._sender_seq[source] = seq
            envelope = Envelope(msg_id=seq, source=source, target=target,
                                kind=kind, payload=payload,
                                sent_at=self._clock())
            queue.append(envelope)
        return envelope

    def poll(self, module: str, max_n: int = 64) -> list[Envelope]:
        with self._lock:
            queue = self._queues.get(module)
            if queue is None:
                raise UnknownModuleError(f"no module registered as {module!r}")
            batch = []
            while queue and len(batch) < max_n:
                batch.append(queue.popleft())
        return batch

    def pending(self, module: str) -> int:
        with self._lock:
            queue = self._queues.get(module)
            if queue is None:
                raise UnknownModuleError(f"no module registered as {module!r}")
            return len(queue)
