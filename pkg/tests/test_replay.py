"""Scripted replay, transcript rendering, and report artifacts."""

import json

import pytest

from rescuegraph.report import (
    render_findings, render_stats, render_transcript, write_replay_report,
    write_stats_report,
)
from rescuegraph.runtime import (
    Runtime, ScriptDivergence, ScriptError, ScriptedVitalsFeed, load_script,
    replay, run_script,
)
from rescuegraph.session import SessionStatus
from rescuegraph.validate import Finding, Severity, stats


@pytest.fixture(scope="module")
def hypo_script(fixtures_dir):
    return load_script(fixtures_dir / "hypo_script.json")


class TestLoadScript:
    def test_from_file(self, hypo_script):
        assert hypo_script.patient_id == "p1"
        assert hypo_script.entry == "bpr_hypoglykaemie"
        assert [s.action for s in hypo_script.steps] \
            == ["choice", "ack", "ack", "ack"]

    def test_from_text(self):
        script = load_script(json.dumps({
            "patient_id": "p", "entry": "start",
            "steps": [{"expect": "start", "action": "stop"}]}))
        assert script.steps[0].arg is None

    def test_rejects_bad_input(self):
        with pytest.raises(ScriptError, match="not valid JSON"):
            load_script("{nope")
        with pytest.raises(ScriptError, match="missing field"):
            load_script(json.dumps({"patient_id": "p", "steps": []}))
        with pytest.raises(ScriptError, match="unknown action"):
            load_script(json.dumps({
                "patient_id": "p", "entry": "start",
                "steps": [{"expect": "x", "action": "dance"}]}))
        with pytest.raises(ScriptError, match="needs arg"):
            load_script(json.dumps({
                "patient_id": "p", "entry": "start",
                "steps": [{"expect": "x", "action": "jump"}]}))


class TestReplay:
    def test_hypoglycemia_transcript_byte_equal(self, corpus_graph,
                                                hypo_script, fixtures_dir):
        session = replay(corpus_graph, hypo_script,
                         fixtures_dir / "hypo_vitals.csv")
        assert session.status is SessionStatus.STOPPED
        engine_export = {"entries": [e.to_dict() for e in session.audit]}
        expected = (fixtures_dir / "hypo_transcript.txt").read_text()
        assert render_transcript(engine_export) == expected

    def test_replay_is_deterministic(self, corpus_graph, hypo_script,
                                     fixtures_dir):
        def export():
            session = replay(corpus_graph, hypo_script,
                             fixtures_dir / "hypo_vitals.csv")
            return [e.to_dict() for e in session.audit]

        assert export() == export()  # timestamps included

    def test_boundary_reading_takes_hypoglycemia_branch(self, corpus_graph,
                                                        hypo_script,
                                                        fixtures_dir):
        session = replay(corpus_graph, hypo_script,
                         fixtures_dir / "hypo_vitals_boundary.csv")
        assert session.status is SessionStatus.STOPPED
        first_check = next(e for e in session.audit
                           if e.node_id == "hypo_bz_check"
                           and e.action == "confirmed")
        assert first_check.choice == "yes"
        assert first_check.value.reading == 60.0
        assert first_check.value.in_range is True

    def test_missing_vitals_diverges_at_first_check(self, corpus_graph,
                                                    hypo_script):
        with pytest.raises(ScriptDivergence) as exc:
            replay(corpus_graph, hypo_script, vitals_source=None)
        assert exc.value.step == 0
        assert exc.value.expected == "hypo_wach_check"
        assert exc.value.actual == "hypo_bz_check"
        assert "step 0" in str(exc.value)

    def test_wrong_expectation_names_step(self, corpus_graph):
        script = load_script(json.dumps({
            "patient_id": "p1", "entry": "start",
            "steps": [{"expect": "start", "action": "choice", "arg": "1"},
                      {"expect": "cab_b", "action": "ack"}]}))
        with pytest.raises(ScriptDivergence) as exc:
            replay(corpus_graph, script)
        assert (exc.value.step, exc.value.expected, exc.value.actual) \
            == (1, "cab_b", "cab_c")

    def test_invalid_choice_becomes_divergence(self, corpus_graph):
        script = load_script(json.dumps({
            "patient_id": "p1", "entry": "start",
            "steps": [{"expect": "start", "action": "choice",
                       "arg": "vielleicht"}]}))
        with pytest.raises(ScriptDivergence, match="not among"):
            replay(corpus_graph, script)

    def test_feed_only_pulls_rows_the_session_asked_for(self, corpus_graph,
                                                        hypo_script,
                                                        fixtures_dir):
        text = (fixtures_dir / "hypo_vitals.csv").read_text()
        text += "p2,PULSE,70,1/min,99000\n"
        runtime = Runtime(corpus_graph, simulation=True, clock=lambda: 0.0)
        feed = ScriptedVitalsFeed(runtime, text)
        run_script(runtime, hypo_script)
        assert feed.position == 2
        assert runtime.store.record_count() == 2
        assert runtime.store.latest("p2", "PULSE") is None

    def test_jump_step(self, corpus_graph):
        script = load_script(json.dumps({
            "patient_id": "p1", "entry": "bpr_kardial",
            "steps": [{"expect": "kardial_ekg", "action": "jump",
                       "arg": "asthma_ekg"},
                      {"expect": "asthma_ekg", "action": "stop"}]}))
        session = replay(corpus_graph, script)
        assert session.status is SessionStatus.STOPPED
        assert session.current == "asthma_ekg"

    def test_stop_step_on_already_stopped_session_passes(self, corpus_graph,
                                                         fixtures_dir):
        script = load_script(json.dumps({
            "patient_id": "p1", "entry": "bpr_hypoglykaemie",
            "steps": [{"expect": "hypo_wach_check", "action": "choice",
                       "arg": "yes"},
                      {"expect": "hypo_glukose_oral", "action": "ack"},
                      {"expect": "hypo_monitoring", "action": "ack"},
                      {"expect": "hypo_transport", "action": "ack"},
                      {"expect": "stop_uebergabe", "action": "stop"}]}))
        session = replay(corpus_graph, script,
                         fixtures_dir / "hypo_vitals.csv")
        assert session.status is SessionStatus.STOPPED


class TestRendering:
    def test_transcript_line_shapes(self):
        audit = {"entries": [
            {"seq": 0, "ts": 1.0, "node": "a", "action": "created"},
            {"seq": 1, "ts": 2.0, "node": "a", "action": "confirmed",
             "choice": "yes", "to": "b",
             "value": {"parameter": "SPO2", "reading": 92.5, "unit": "%",
                       "in_range": False, "stale": False}},
        ]}
        assert render_transcript(audit) == (
            "00 created     a\n"
            "01 confirmed   a choice=yes value=SPO2:92.5% in_range=false -> b\n")

    def test_empty_transcript(self):
        assert render_transcript({"entries": []}) == ""

    def test_findings_text_and_structured(self):
        findings = [Finding("V4", Severity.ERROR, "n1", "broken")]
        assert render_findings(findings) == "V4 error   n1: broken\n"
        assert render_findings([]) == "no findings\n"
        parsed = json.loads(render_findings(findings, fmt="structured"))
        assert parsed == [{"code": "V4", "severity": "error", "locus": "n1",
                           "message": "broken"}]
        assert json.loads(render_findings([], fmt="structured")) == []

    def test_stats_text_lists_kinds(self, corpus_graph, corpus_manifest):
        text = render_stats(stats(corpus_graph))
        assert f"nodes: {corpus_manifest.node_count}" in text
        assert f"bpr paths: {corpus_manifest.bpr_count}" in text
        assert "  decisionYN: " in text
        structured = json.loads(render_stats(stats(corpus_graph),
                                             fmt="structured"))
        assert structured == corpus_manifest.to_dict()


class TestReportArtifacts:
    def test_stats_report_files(self, corpus_graph, corpus_manifest, tmp_path):
        paths = write_stats_report(stats(corpus_graph), tmp_path)
        assert [p.name for p in paths] \
            == ["stats.csv", "nodes_by_kind.png", "edges_by_kind.png"]
        for p in paths:
            assert p.exists() and p.stat().st_size > 0
        rows = (tmp_path / "stats.csv").read_text().splitlines()
        assert rows[0] == "section,kind,count"
        assert f"total,nodes,{corpus_manifest.node_count}" in rows
        # pngs really are pngs
        for p in paths[1:]:
            assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_replay_report_files(self, corpus_graph, hypo_script,
                                 fixtures_dir, tmp_path):
        vitals_text = (fixtures_dir / "hypo_vitals.csv").read_text()
        session = replay(corpus_graph, hypo_script,
                         fixtures_dir / "hypo_vitals.csv")
        audit = {"entries": [e.to_dict() for e in session.audit]}
        paths = write_replay_report(audit, tmp_path, vitals_csv=vitals_text)
        assert [p.name for p in paths] \
            == ["transcript.txt", "audit.csv", "vitals_timeline.png"]
        transcript = (tmp_path / "transcript.txt").read_text()
        assert transcript == (fixtures_dir / "hypo_transcript.txt").read_text()
        audit_lines = (tmp_path / "audit.csv").read_text().splitlines()
        assert audit_lines[0] \
            == "seq,action,node,choice,to,parameter,reading,unit,in_range"
        assert len(audit_lines) == len(session.audit) + 1

    def test_replay_report_without_vitals(self, tmp_path):
        audit = {"entries": [{"seq": 0, "ts": 0.0, "node": "a",
                              "action": "created"}]}
        paths = write_replay_report(audit, tmp_path)
        assert [p.name for p in paths] == ["transcript.txt", "audit.csv"]
