"""Validator checks, mutation kill tests, stats and manifest equality."""

import copy
import json
import random

import pytest

from rescuegraph.graphio import parse_graph
from rescuegraph.model import Graph, GraphMeta, Node, NodeKind
from rescuegraph.validate import (
    Finding, GraphStats, Severity, errors_only, stats, validate,
)

import oracles
from generators import random_doc

MINIMAL = {
    "meta": {"name": "minimal", "version": "1"},
    "nodes": [
        {"id": "a", "name": "Start", "kind": "start"},
        {"id": "z", "name": "Ende", "kind": "stop"},
    ],
    "edges": [{"from": "a", "to": "z", "kind": "R", "rank": 1}],
}


def validated(doc: dict):
    return validate(parse_graph(json.dumps(doc)))


def error_codes(findings) -> set[str]:
    return {f.code for f in errors_only(findings)}


# Single targeted corpus mutations; each must trip exactly its own check.
def _drop_start(doc):
    next(n for n in doc["nodes"] if n["id"] == "start")["kind"] = "action"


def _add_island(doc):
    doc["nodes"] += [
        {"id": "insel_a", "name": "Insel A", "kind": "display"},
        {"id": "insel_b", "name": "Insel B", "kind": "display"},
    ]
    doc["edges"].append(
        {"from": "insel_a", "to": "insel_b", "kind": "additionalInformation"})


def _remove_yes_edge(doc):
    doc["edges"] = [e for e in doc["edges"]
                    if not (e["from"] == "hypo_wach_check" and e["kind"] == "yes")]


def _duplicate_rank(doc):
    for e in doc["edges"]:
        if e["from"] == "asthma_auskultation" and e.get("rank") == 2:
            e["rank"] = 1


def _strip_value(doc):
    next(n for n in doc["nodes"] if n["id"] == "hypo_bz_check").pop("value")


def _break_hub_pair(doc):
    doc["edges"] = [e for e in doc["edges"]
                    if not (e["from"] == "hub_bpr" and e["to"] == "bpr_asthma")]


def _yes_from_action(doc):
    doc["edges"].append(
        {"from": "hypo_glukose_oral", "to": "hypo_bz_recheck", "kind": "yes"})


MUTATIONS = [
    ("V2", _drop_start),
    ("V3", _add_island),
    ("V4", _remove_yes_edge),
    ("V5", _duplicate_rank),
    ("V6", _strip_value),
    ("V7", _break_hub_pair),
    ("V10", _yes_from_action),
]


class TestCorpus:
    def test_corpus_is_clean(self, corpus_graph):
        assert validate(corpus_graph) == []

    @pytest.mark.parametrize("code,mutate", MUTATIONS, ids=[m[0] for m in MUTATIONS])
    def test_mutation_trips_exactly_one_check(self, corpus_doc, code, mutate):
        doc = copy.deepcopy(corpus_doc)
        mutate(doc)
        findings = validated(doc)
        assert error_codes(findings) == {code}

    def test_island_mutation_names_both_nodes(self, corpus_doc):
        doc = copy.deepcopy(corpus_doc)
        _add_island(doc)
        loci = sorted(f.locus for f in validated(doc) if f.code == "V3")
        assert loci == ["insel_a", "insel_b"]

    def test_missing_label_is_warning_only(self, corpus_doc):
        doc = copy.deepcopy(corpus_doc)
        next(n for n in doc["nodes"] if n["id"] == "hypo_glukose_oral").pop("bpr")
        findings = validated(doc)
        assert errors_only(findings) == []
        assert [(f.code, f.severity, f.locus) for f in findings] \
            == [("V8", Severity.WARNING, "hypo_glukose_oral")]


class TestIndividualChecks:
    def test_v2_missing_stop(self):
        findings = validated({
            "meta": {"name": "t", "version": "1"},
            "nodes": [{"id": "a", "name": "x", "kind": "start"}],
            "edges": [],
        })
        assert error_codes(findings) == {"V2"}
        assert any("no stop node" in f.message for f in findings)

    def test_v4_priority_edge_on_binary_decision(self):
        doc = copy.deepcopy(MINIMAL)
        doc["nodes"][0] = {"id": "a", "name": "Frage", "kind": "decisionYN", "bpr": "p"}
        doc["nodes"].append({"id": "b", "name": "Alt", "kind": "stop"})
        doc["edges"] = [
            {"from": "a", "to": "z", "kind": "yes"},
            {"from": "a", "to": "b", "kind": "no"},
            {"from": "a", "to": "z", "kind": "R", "rank": 1},
        ]
        # no start node, so V2 fires alongside; V4 must name the R edge count
        findings = validated(doc)
        v4 = [f for f in findings if f.code == "V4"]
        assert len(v4) == 1
        assert "1 R edges" in v4[0].message

    def test_v5_double_sentinel(self):
        doc = copy.deepcopy(MINIMAL)
        doc["edges"] = [
            {"from": "a", "to": "z", "kind": "R", "rank": "n"},
            {"from": "a", "to": "z", "kind": "R", "rank": "n"},
        ]
        findings = validated(doc)
        assert error_codes(findings) == {"V5"}
        assert any("Rn sentinel used on 2 edges" in f.message for f in findings)

    def test_v6_min_above_max_on_hand_built_graph(self):
        # the parser rejects min > max, so build the graph directly
        g = Graph(
            GraphMeta("t", "1"),
            [Node(id="a", name="x", kind=NodeKind.START, min=5.0, max=2.0),
             Node(id="z", name="y", kind=NodeKind.STOP)],
            [],
        )
        codes = error_codes(validate(g))
        assert "V6" in codes

    def test_v3_skipped_without_unique_start(self):
        findings = validated({
            "meta": {"name": "t", "version": "1"},
            "nodes": [
                {"id": "a", "name": "x", "kind": "start"},
                {"id": "b", "name": "y", "kind": "start"},
                {"id": "c", "name": "z", "kind": "stop"},
            ],
            "edges": [],
        })
        assert error_codes(findings) == {"V2"}


class TestConnectivityOracle:
    def test_v3_matches_undirected_reachability(self):
        rng = random.Random(311)
        for _ in range(40):
            doc = random_doc(rng, max_nodes=60)
            findings = validated(doc)
            flagged = {f.locus for f in findings if f.code == "V3"}
            reachable = oracles.reachable_undirected(doc, "n000")
            expected = {n["id"] for n in doc["nodes"]} - reachable
            assert flagged == expected


class TestFindings:
    def test_render_format(self):
        f = Finding("V4", Severity.ERROR, "frage_x", "needs exactly one yes edge")
        assert f.render() == "V4 error   frage_x: needs exactly one yes edge"

    def test_findings_canonically_ordered_and_pure(self):
        doc = {
            "meta": {"name": "t", "version": "1"},
            "nodes": [
                {"id": "b_frage", "name": "B", "kind": "decisionYN", "bpr": "p"},
                {"id": "a_frage", "name": "A", "kind": "decisionYN", "bpr": "p"},
                {"id": "s", "name": "S", "kind": "stop"},
            ],
            "edges": [],
        }
        g = parse_graph(json.dumps(doc))
        first, second = validate(g), validate(g)
        assert first == second
        keys = [(f.code, f.locus, f.message) for f in first]
        assert keys == sorted(keys)
        v4_loci = [f.locus for f in first if f.code == "V4"]
        assert v4_loci == ["a_frage", "b_frage"]


class TestStats:
    def test_minimal(self):
        s = stats(parse_graph(json.dumps(MINIMAL)))
        assert (s.node_count, s.edge_count, s.bpr_count) == (2, 1, 0)
        assert s.nodes_by_kind == {"start": 1, "stop": 1}
        assert s.edges_by_kind == {"R": 1}

    def test_corpus_equals_manifest(self, corpus_graph, corpus_manifest):
        assert stats(corpus_graph) == corpus_manifest

    def test_extra_node_counts(self, corpus_doc):
        doc = copy.deepcopy(corpus_doc)
        doc["nodes"].append({"id": "neu", "name": "Neu", "kind": "action"})
        before = stats(parse_graph(json.dumps(corpus_doc)))
        after = stats(parse_graph(json.dumps(doc)))
        assert after.node_count == before.node_count + 1
        assert after.edge_count == before.edge_count

    def test_counts_sum_by_kind(self, corpus_graph):
        s = stats(corpus_graph)
        assert s.node_count == sum(s.nodes_by_kind.values())
        assert s.edge_count == sum(s.edges_by_kind.values())

    def test_dict_round_trip(self, corpus_graph):
        s = stats(corpus_graph)
        assert GraphStats.from_dict(s.to_dict()) == s
