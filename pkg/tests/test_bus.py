"""Bus delivery guarantees plus the value request/response loop."""

import threading
from collections import Counter

import pytest

from rescuegraph.bus import (
    Bus, DuplicateModuleError, MalformedPayloadError, MessageKind,
    UnknownModuleError,
)
from rescuegraph.runtime import Runtime
from rescuegraph.vitals import VitalsRecord


def value_payload(n=0):
    return {"session_id": f"s{n}", "patient_id": "p1", "parameter": "PULSE"}


class TestBasics:
    def test_send_and_poll(self):
        bus = Bus()
        bus.register("a")
        bus.register("b")
        sent = bus.send("a", "b", MessageKind.VALUE_REQUEST, value_payload())
        assert sent.msg_id == 1
        assert bus.pending("b") == 1
        got = bus.poll("b")
        assert got == [sent]
        assert bus.poll("b") == []
        assert bus.modules() == ["a", "b"]

    def test_duplicate_registration(self):
        bus = Bus()
        bus.register("a")
        with pytest.raises(DuplicateModuleError):
            bus.register("a")

    def test_unknown_target_and_queue(self):
        bus = Bus()
        bus.register("a")
        with pytest.raises(UnknownModuleError):
            bus.send("a", "ghost", MessageKind.VALUE_REQUEST, value_payload())
        with pytest.raises(UnknownModuleError):
            bus.poll("ghost")
        with pytest.raises(UnknownModuleError):
            bus.pending("ghost")

    def test_required_fields_enforced(self):
        bus = Bus()
        bus.register("a")
        cases = [
            (MessageKind.VALUE_REQUEST, {"session_id": "s1"}),
            (MessageKind.VALUE_RESPONSE, {"session_id": "s1", "patient_id": "p",
                                          "parameter": "PULSE"}),
            (MessageKind.PROMPT_UPDATE, {"session_id": "s1"}),
            (MessageKind.DECISION_SUBMITTED, {"choice": "yes"}),
            (MessageKind.WARNING, {"message": "x"}),
            (MessageKind.SITUATION_UPDATE, {"scores": {}}),
            (MessageKind.SESSION_CONTROL, {}),
        ]
        for kind, payload in cases:
            with pytest.raises(MalformedPayloadError):
                bus.send("a", "a", kind, payload)
        assert bus.pending("a") == 0

    def test_extra_payload_fields_allowed(self):
        bus = Bus()
        bus.register("a")
        bus.send("a", "a", MessageKind.SESSION_CONTROL,
                 {"action": "watch", "anything": 1})
        assert bus.pending("a") == 1

    def test_msg_ids_monotone_per_source(self):
        bus = Bus()
        for m in ("a", "b", "c"):
            bus.register(m)
        first = bus.send("a", "b", MessageKind.SESSION_CONTROL, {"action": "x"})
        other = bus.send("b", "c", MessageKind.SESSION_CONTROL, {"action": "x"})
        second = bus.send("a", "c", MessageKind.SESSION_CONTROL, {"action": "x"})
        assert (first.msg_id, second.msg_id) == (1, 2)  # per source, any target
        assert other.msg_id == 1

    def test_poll_batch_limit(self):
        bus = Bus()
        bus.register("a")
        for _ in range(10):
            bus.send("x", "a", MessageKind.SESSION_CONTROL, {"action": "t"})
        assert len(bus.poll("a", max_n=4)) == 4
        assert bus.pending("a") == 6


class TestDeliveryGuarantees:
    def test_interleaved_senders_keep_per_sender_order(self):
        bus = Bus()
        bus.register("sink")
        for i in range(50):
            bus.send("alpha", "sink", MessageKind.SESSION_CONTROL,
                     {"action": "t", "n": i})
            bus.send("beta", "sink", MessageKind.SESSION_CONTROL,
                     {"action": "t", "n": i})
        received = bus.poll("sink", max_n=1000)
        for source in ("alpha", "beta"):
            ids = [e.msg_id for e in received if e.source == source]
            assert ids == sorted(ids) == list(range(1, 51))

    def test_threaded_senders_lose_nothing(self):
        bus = Bus()
        bus.register("sink")
        senders, per_sender = 20, 50

        def run(name):
            for i in range(per_sender):
                bus.send(name, "sink", MessageKind.SESSION_CONTROL,
                         {"action": "t", "n": i})

        threads = [threading.Thread(target=run, args=(f"m{k}",))
                   for k in range(senders)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        received = []
        while True:
            batch = bus.poll("sink", max_n=97)
            if not batch:
                break
            received.extend(batch)
        assert Counter((e.source, e.msg_id) for e in received) == Counter(
            (f"m{k}", i + 1) for k in range(senders) for i in range(per_sender))
        for k in range(senders):
            ids = [e.msg_id for e in received if e.source == f"m{k}"]
            assert ids == list(range(1, per_sender + 1))

    def test_concurrent_pollers_each_get_disjoint_slices(self):
        bus = Bus()
        bus.register("sink")
        total = 500
        for i in range(total):
            bus.send("one", "sink", MessageKind.SESSION_CONTROL,
                     {"action": "t", "n": i})
        buckets = [[], []]
        done = threading.Barrier(2)

        def run(bucket):
            done.wait()
            while True:
                batch = bus.poll("sink", max_n=7)
                if not batch:
                    return
                bucket.extend(batch)

        threads = [threading.Thread(target=run, args=(b,)) for b in buckets]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        ids_a = {e.msg_id for e in buckets[0]}
        ids_b = {e.msg_id for e in buckets[1]}
        assert len(buckets[0]) + len(buckets[1]) == total
        assert ids_a.isdisjoint(ids_b)
        assert ids_a | ids_b == set(range(1, total + 1))


class TestValueLoop:
    def record_sends(self, runtime):
        log = []
        original = runtime.bus.send

        def recording_send(source, target, kind, payload):
            envelope = original(source, target, kind, payload)
            log.append(envelope)
            return envelope

        runtime.bus.send = recording_send
        return log

    def test_one_request_gets_exactly_one_response(self, corpus_graph):
        runtime = Runtime(corpus_graph, hold_vitals=True)
        log = self.record_sends(runtime)
        session = runtime.engine.create_session("p1", "bpr_hypoglykaemie")
        runtime.drain()

        def count(kind):
            return sum(1 for e in log if e.kind is kind
                       and e.payload.get("session_id") == session.session_id)

        assert count(MessageKind.VALUE_REQUEST) == 1
        assert count(MessageKind.VALUE_RESPONSE) == 0  # parked, no data yet
        runtime.ingest(VitalsRecord("p1", "BLOOD_SUGAR", 55.0, "mg/dl", 1000))
        assert count(MessageKind.VALUE_RESPONSE) == 1
        assert session.pending.attached_value.reading == 55.0
        # follow-up readings warn the watcher but never answer again
        runtime.ingest(VitalsRecord("p1", "BLOOD_SUGAR", 90.0, "mg/dl", 2000))
        assert count(MessageKind.VALUE_RESPONSE) == 1
        warnings = [e for e in log if e.kind is MessageKind.WARNING]
        assert len(warnings) == 1
        assert "BLOOD_SUGAR 90" in warnings[0].payload["message"]

    def test_decision_submitted_envelope_moves_session(self, corpus_graph):
        runtime = Runtime(corpus_graph, hold_vitals=False)
        session = runtime.engine.create_session("p1", "start")
        runtime.drain()
        runtime.bus.send("ui", "kg", MessageKind.DECISION_SUBMITTED,
                         {"session_id": session.session_id, "choice": "1"})
        runtime.drain()
        assert session.current == "cab_c"

    def test_ui_queue_collects_prompt_updates(self, corpus_graph):
        runtime = Runtime(corpus_graph, hold_vitals=False)
        runtime.engine.create_session("p1", "start")
        runtime.drain()
        kinds = [e.kind for e in runtime.poll_ui()]
        assert MessageKind.PROMPT_UPDATE in kinds
        assert MessageKind.SESSION_CONTROL in kinds  # audit entries ride along
