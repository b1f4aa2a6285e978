"""Vitals store and middleware: records timestamped readings per patient and
answers the engine's value requests.

Stands in for a monitor-device + database chain. Readings arrive as
(patient, parameter, reading, unit, timestamp_ms) rows, via single ingests
or a CSV feed; timestamps must strictly increase within each
(patient, parameter) stream.
"""

from __future__ import annotations

import csv
import io
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .bus import Bus, MessageKind
from .ioutil import read_text_or_literal

CSV_HEADER = ["patient_id", "parameter", "reading", "unit", "timestamp_ms"]

#: Readings older than this many seconds are answered as stale.
DEFAULT_MAX_AGE = 300.0


class VitalsError(ValueError):
    pass


class NonMonotoneTimestampError(VitalsError):
    pass


class CsvFormatError(VitalsError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class VitalsRecord:
    patient_id: str
    parameter: str
    reading: float
    unit: str
    timestamp_ms: int

    def csv_row(self) -> list[str]:
        return [self.patient_id, self.parameter, f"{self.reading:g}",
                self.unit, str(self.timestamp_ms)]


@dataclass(frozen=True)
class ValueRequest:
    session_id: str
    patient_id: str
    parameter: str
    min: Optional[float] = None
    max: Optional[float] = None


@dataclass(frozen=True)
class ValueResponse:
    session_id: str
    patient_id: str
    parameter: str
    freshness: str  # fresh | stale | unavailable
    reading: Optional[float] = None
    unit: Optional[str] = None
    timestamp_ms: Optional[int] = None
    in_range: Optional[bool] = None


def in_range(reading: float, lo: Optional[float], hi: Optional[float]) -> bool:
    """Inclusive bounds; a missing bound is unbounded on that side."""
    if lo is not None and reading < lo:
        return False
    if hi is not None and reading > hi:
        return False
    return True


class VitalsStore:
    """Append-only store of readings, optionally mirrored to a CSV file.

    Per-stream writes are serialized under one lock; readers see a
    consistent snapshot.
    """

    def __init__(self, persist_path: str | Path | None = None):
        self._lock = threading.Lock()
        self._streams: dict[tuple[str, str], list[VitalsRecord]] = {}
        self._count = 0
        self._persist = None
        if persist_path is not None:
            path = Path(persist_path)
            fresh = not path.exists() or path.stat().st_size == 0
            self._persist = path.open("a", encoding="utf-8", newline="")
            if fresh:
                csv.writer(self._persist).writerow(CSV_HEADER)
                self._persist.flush()

    @classmethod
    def restore(cls, path: str | Path) -> "VitalsStore":
        store = cls()
        for record in parse_csv(Path(path).read_text(encoding="utf-8")):
            store.ingest(record)
        return store

    def ingest(self, record: VitalsRecord) -> VitalsRecord:
        key = (record.patient_id, record.parameter)
        with self._lock:
            stream = self._streams.setdefault(key, [])
            if stream and record.timestamp_ms <= stream[-1].timestamp_ms:
                raise NonMonotoneTimestampError(
                    f"timestamp {record.timestamp_ms} not after "
                    f"{stream[-1].timestamp_ms} for {key[0]}/{key[1]}")
            stream.append(record)
            self._count += 1
            if self._persist is not None:
                csv.writer(self._persist).writerow(record.csv_row())
                self._persist.flush()
        return record

    def latest(self, patient_id: str, parameter: str) -> Optional[VitalsRecord]:
        with self._lock:
            stream = self._streams.get((patient_id, parameter))
            return stream[-1] if stream else None

    def snapshot(self, patient_id: str) -> dict[str, VitalsRecord]:
        """Latest reading per parameter for one patient."""
        with self._lock:
            return {param: stream[-1]
                    for (pid, param), stream in self._streams.items()
                    if pid == patient_id and stream}

    def record_count(self) -> int:
        with self._lock:
            return self._count

    def latest_timestamp_ms(self) -> Optional[int]:
        with self._lock:
            stamps = [s[-1].timestamp_ms for s in self._streams.values() if s]
            return max(stamps) if stamps else None

    def close(self) -> None:
        if self._persist is not None:
            self._persist.close()
            self._persist = None


def answer(store: VitalsStore, request: ValueRequest, now: float,
           max_age: float = DEFAULT_MAX_AGE) -> ValueResponse:
    """Pure given a store snapshot: latest reading, freshness, range check.

    in_range is only set when a reading and at least one bound exist.
    """
    record = store.latest(request.patient_id, request.parameter)
    if record is None:
        return ValueResponse(session_id=request.session_id,
                             patient_id=request.patient_id,
                             parameter=request.parameter,
                             freshness="unavailable")
    age = now - record.timestamp_ms / 1000.0
    freshness = "stale" if age > max_age else "fresh"
    bounded = request.min is not None or request.max is not None
    return ValueResponse(
        session_id=request.session_id,
        patient_id=request.patient_id,
        parameter=request.parameter,
        freshness=freshness,
        reading=record.reading,
        unit=record.unit,
        timestamp_ms=record.timestamp_ms,
        in_range=in_range(record.reading, request.min, request.max)
        if bounded else None,
    )


def parse_csv(text: str) -> list[VitalsRecord]:
    """Parse the vitals CSV format; errors carry the offending line number."""
    reader = csv.reader(io.StringIO(text))
    rows = [(i + 1, row) for i, row in enumerate(reader) if row]
    if not rows:
        return []
    first_line, header = rows[0]
    if header != CSV_HEADER:
        raise CsvFormatError(
            f"expected header {','.join(CSV_HEADER)}", first_line)
    records = []
    for line, row in rows[1:]:
        if len(row) != 5:
            raise CsvFormatError(f"expected 5 fields, got {len(row)}", line)
        patient_id, parameter, reading, unit, stamp = row
        if not patient_id or not parameter:
            raise CsvFormatError("empty patient_id or parameter", line)
        try:
            value = float(reading)
        except ValueError:
            raise CsvFormatError(f"bad reading {reading!r}", line) from None
        try:
            timestamp_ms = int(stamp)
        except ValueError:
            raise CsvFormatError(f"bad timestamp {stamp!r}", line) from None
        records.append(VitalsRecord(patient_id, parameter, value, unit,
                                    timestamp_ms))
    return records


def play_feed(store: VitalsStore, source: str | Path, speed: float = 0.0,
              sleep: Callable[[float], None] = time.sleep,
              on_ingest: Callable[[VitalsRecord], None] | None = None) -> int:
    """Replay a CSV into the store; speed scales inter-row delays (0 = now).

    Rows must be time-ordered within each stream; the first violation is
    reported with its line number.
    """
    if speed < 0:
        raise VitalsError("speed factor must be >= 0")
    records = parse_csv(read_text_or_literal(source))
    previous_ms: Optional[int] = None
    for index, record in enumerate(records):
        if speed > 0 and previous_ms is not None:
            delta = (record.timestamp_ms - previous_ms) / 1000.0
            if delta > 0:
                sleep(delta * speed)
        previous_ms = record.timestamp_ms
        try:
            store.ingest(record)
        except NonMonotoneTimestampError as exc:
            # +2: one for the header row, one for 1-based numbering
            raise CsvFormatError(str(exc), index + 2) from None
        if on_ingest is not None:
            on_ingest(record)
    return len(records)


@dataclass
class _Watch:
    session_id: str
    patient_id: str
    parameter: str
    min: Optional[float]
    max: Optional[float]


class MiddlewareService:
    """Bus-facing wrapper: answers value requests, watches bounds on ingest.

    With hold_when_unavailable, a request for a missing reading parks until
    a matching record arrives (live mode); otherwise it is answered as
    unavailable immediately (replay mode).
    """

    MODULE = "middleware"

    def __init__(self, bus: Bus, store: VitalsStore,
                 max_age: float = DEFAULT_MAX_AGE,
                 clock: Callable[[], float] = time.time,
                 hold_when_unavailable: bool = False):
        self.bus = bus
        self.store = store
        self.max_age = max_age
        self.clock = clock
        self.hold_when_unavailable = hold_when_unavailable
        # called with each ValueRequest before answering; replay hooks a
        # scripted feed in here
        self.pre_answer: Callable[[ValueRequest], None] | None = None
        self._held: list[ValueRequest] = []
        self._watches: dict[str, _Watch] = {}
        self._in_flight: set[str] = set()

    def handle(self, envelope) -> None:
        if envelope.kind is MessageKind.VALUE_REQUEST:
            self._handle_request(self._request_from_payload(envelope.payload))
        elif envelope.kind is MessageKind.SESSION_CONTROL:
            self._handle_control(envelope.payload)

    @staticmethod
    def _request_from_payload(payload: dict) -> ValueRequest:
        return ValueRequest(session_id=payload["session_id"],
                            patient_id=payload["patient_id"],
                            parameter=payload["parameter"],
                            min=payload.get("min"),
                            max=payload.get("max"))

    def _handle_request(self, request: ValueRequest) -> None:
        if self.pre_answer is not None:
            # rows pulled in here answer this session; suppress the watch
            # warning the same reading would otherwise raise for it
            self._in_flight.add(request.session_id)
            try:
                self.pre_answer(request)
            finally:
                self._in_flight.discard(request.session_id)
        response = answer(self.store, request, self.clock(), self.max_age)
        if response.freshness == "unavailable" and self.hold_when_unavailable:
            self._held.append(request)
            return
        self._respond(response)

    def _handle_control(self, payload: dict) -> None:
        action = payload.get("action")
        if action == "watch":
            self._watches[payload["session_id"]] = _Watch(
                session_id=payload["session_id"],
                patient_id=payload["patient_id"],
                parameter=payload["parameter"],
                min=payload.get("min"),
                max=payload.get("max"))
        elif action == "unwatch":
            self._watches.pop(payload.get("session_id"), None)

    def _respond(self, response: ValueResponse) -> None:
        payload = {"session_id": response.session_id,
                   "patient_id": response.patient_id,
                   "parameter": response.parameter,
                   "freshness": response.freshness}
        if response.reading is not None:
            payload.update(reading=response.reading, unit=response.unit,
                           timestamp_ms=response.timestamp_ms)
        if response.in_range is not None:
            payload["in_range"] = response.in_range
        self.bus.send(self.MODULE, "kg", MessageKind.VALUE_RESPONSE, payload)

    def ingest(self, record: VitalsRecord) -> VitalsRecord:
        """Store a record, release held requests, raise watch warnings."""
        self.store.ingest(record)
        answered_sessions = set()
        still_held = []
        for request in self._held:
            if (request.patient_id == record.patient_id
                    and request.parameter == record.parameter):
                self._respond(answer(self.store, request, self.clock(),
                                     self.max_age))
                answered_sessions.add(request.session_id)
            else:
                still_held.append(request)
        self._held = still_held
        for watch in list(self._watches.values()):
            if (watch.patient_id != record.patient_id
                    or watch.parameter != record.parameter
                    or watch.session_id in answered_sessions
                    or watch.session_id in self._in_flight):
                # an answered request already surfaces this reading
                continue
            if not in_range(record.reading, watch.min, watch.max):
                self.bus.send(self.MODULE, "ui", MessageKind.WARNING, {
                    "session_id": watch.session_id,
                    "message": f"{record.parameter} {record.reading:g} "
                               f"{record.unit} outside "
                               f"[{_fmt(watch.min)}, {_fmt(watch.max)}]",
                    "parameter": record.parameter,
                    "reading": record.reading,
                    "unit": record.unit,
                })
        return record


def _fmt(bound: Optional[float]) -> str:
    return "-" if bound is None else f"{bound:g}"
