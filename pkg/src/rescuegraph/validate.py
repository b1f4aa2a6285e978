"""Structural validation checks and graph statistics.

Checks (the code appears in every finding):

  V1  node ids unique and consistent with the index (parser-guaranteed)
  V2  exactly one start node, at least one stop node
  V3  weak connectivity: every node reachable from start ignoring direction
  V4  decisionYN nodes have exactly one yes and one no edge and no R edges
  V5  priority ranks unique per source node, at most one Rn sentinel
  V6  min <= max when both present; d_type requires value
  V7  jump hubs carry opposed link-edge pairs to every node of their kind
  V8  path-content nodes carry a bpr or saa membership label (warning)
  V9  no dangling edges (parser-guaranteed)
  V10 yes/no edges originate only from decisionYN nodes

All checks report error severity except V8. findings are returned sorted by
(code, locus) so repeated runs diff cleanly; an empty list means valid.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .model import HUB_KINDS, RN_RANK, Edge, EdgeKind, Graph, NodeKind

#: Node kinds V8 expects to carry a path membership label.
_LABELED_KINDS = frozenset({
    NodeKind.DECISION_YN,
    NodeKind.DECISION_OR,
    NodeKind.PROCEDURE,
    NodeKind.INVASIVE_PROCEDURE,
    NodeKind.ACTION,
})


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    code: str
    severity: Severity
    locus: str  # node id, or "from->to" for edge findings
    message: str

    def render(self) -> str:
        return f"{self.code} {self.severity.value:<7} {self.locus}: {self.message}"


@dataclass
class GraphStats:
    node_count: int
    edge_count: int
    nodes_by_kind: dict[str, int]
    edges_by_kind: dict[str, int]
    bpr_count: int
    saa_count: int

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "nodes_by_kind": dict(sorted(self.nodes_by_kind.items())),
            "edges_by_kind": dict(sorted(self.edges_by_kind.items())),
            "bpr_count": self.bpr_count,
            "saa_count": self.saa_count,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "GraphStats":
        return cls(
            node_count=raw["node_count"],
            edge_count=raw["edge_count"],
            nodes_by_kind=dict(raw["nodes_by_kind"]),
            edges_by_kind=dict(raw["edges_by_kind"]),
            bpr_count=raw["bpr_count"],
            saa_count=raw["saa_count"],
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphStats):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def stats(graph: Graph) -> GraphStats:
    """Exact node/edge counts, overall and by kind."""
    nodes_by_kind = Counter(n.kind.value for n in graph.nodes.values())
    edges_by_kind = Counter(e.kind.value for e in graph.edges)
    return GraphStats(
        node_count=len(graph.nodes),
        edge_count=len(graph.edges),
        nodes_by_kind=dict(nodes_by_kind),
        edges_by_kind=dict(edges_by_kind),
        bpr_count=nodes_by_kind.get(NodeKind.BPR.value, 0),
        saa_count=nodes_by_kind.get(NodeKind.SAA.value, 0),
    )


def load_manifest(path: str | Path) -> GraphStats:
    """Read a corpus count manifest (same shape as stats output)."""
    return GraphStats.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _check_v1_ids(graph: Graph, out: list[Finding]) -> None:
    for node_id, node in graph.nodes.items():
        if node.id != node_id:
            out.append(Finding("V1", Severity.ERROR, node_id,
                               f"index key disagrees with node id {node.id!r}"))


def _check_v2_start_stop(graph: Graph, out: list[Finding]) -> None:
    starts = graph.nodes_of_kind(NodeKind.START)
    stops = graph.nodes_of_kind(NodeKind.STOP)
    if len(starts) != 1:
        locus = starts[0].id if starts else "<graph>"
        out.append(Finding("V2", Severity.ERROR, locus,
                           f"expected exactly 1 start node, found {len(starts)}"))
    if not stops:
        out.append(Finding("V2", Severity.ERROR, "<graph>", "no stop node"))


def _check_v3_connectivity(graph: Graph, out: list[Finding]) -> None:
    starts = graph.nodes_of_kind(NodeKind.START)
    if len(starts) != 1:
        return  # V2 already reports; no unambiguous root to search from
    undirected: dict[str, set[str]] = {n: set() for n in graph.nodes}
    for e in graph.edges:
        undirected[e.from_id].add(e.to_id)
        undirected[e.to_id].add(e.from_id)
    seen = {starts[0].id}
    queue = deque(seen)
    while queue:
        for neighbor in undirected[queue.popleft()]:
            if neighbor not in seen:
                seen.add(neighbor)
                queue.append(neighbor)
    for node_id in graph.nodes:
        if node_id not in seen:
            out.append(Finding("V3", Severity.ERROR, node_id,
                               "not reachable from start (even ignoring direction)"))


def _check_v4_binary_decisions(graph: Graph, out: list[Finding]) -> None:
    for node in graph.nodes_of_kind(NodeKind.DECISION_YN):
        kinds = Counter(e.kind for e in graph.out_index[node.id])
        if kinds[EdgeKind.YES] != 1 or kinds[EdgeKind.NO] != 1:
            out.append(Finding(
                "V4", Severity.ERROR, node.id,
                f"needs exactly one yes and one no edge, found "
                f"{kinds[EdgeKind.YES]} yes / {kinds[EdgeKind.NO]} no"))
        if kinds[EdgeKind.PRIORITY]:
            out.append(Finding("V4", Severity.ERROR, node.id,
                               f"carries {kinds[EdgeKind.PRIORITY]} R edges"))


def _check_v5_rank_uniqueness(graph: Graph, out: list[Finding]) -> None:
    for node_id, edges in graph.out_index.items():
        ranks = Counter(e.rank for e in edges if e.kind is EdgeKind.PRIORITY)
        for rank, count in sorted(ranks.items(), key=lambda kv: str(kv[0])):
            if count > 1:
                what = "Rn sentinel" if rank == RN_RANK else f"rank {rank}"
                out.append(Finding("V5", Severity.ERROR, node_id,
                                   f"{what} used on {count} edges"))


def _check_v6_properties(graph: Graph, out: list[Finding]) -> None:
    for node in graph.nodes.values():
        if node.min is not None and node.max is not None and node.min > node.max:
            out.append(Finding("V6", Severity.ERROR, node.id,
                               f"min {node.min} exceeds max {node.max}"))
        if node.d_type is not None and node.value is None:
            out.append(Finding("V6", Severity.ERROR, node.id,
                               "d_type set but no value property to request"))


def _check_v7_hubs(graph: Graph, out: list[Finding]) -> None:
    for hub_kind, (target_kind, link_kind) in HUB_KINDS.items():
        for hub in graph.nodes_of_kind(hub_kind):
            forward = {e.to_id for e in graph.out_index[hub.id] if e.kind is link_kind}
            backward = {e.from_id for e in graph.in_index[hub.id] if e.kind is link_kind}
            for target in graph.nodes_of_kind(target_kind):
                missing = []
                if target.id not in forward:
                    missing.append(f"{hub.id}->{target.id}")
                if target.id not in backward:
                    missing.append(f"{target.id}->{hub.id}")
                if missing:
                    out.append(Finding(
                        "V7", Severity.ERROR, hub.id,
                        f"missing {link_kind.value} edge(s) {', '.join(missing)} "
                        f"for {target_kind.value} node {target.id}"))


def _check_v8_membership(graph: Graph, out: list[Finding]) -> None:
    for node in graph.nodes.values():
        if node.kind in _LABELED_KINDS and node.bpr is None and node.saa is None:
            out.append(Finding("V8", Severity.WARNING, node.id,
                               "path node without bpr or saa membership label"))


def _check_v9_dangling(graph: Graph, out: list[Finding]) -> None:
    for e in graph.edges:
        for endpoint in (e.from_id, e.to_id):
            if endpoint not in graph.nodes:
                out.append(Finding("V9", Severity.ERROR, e.locus(),
                                   f"edge endpoint {endpoint!r} does not exist"))


def _check_v10_yes_no_origin(graph: Graph, out: list[Finding]) -> None:
    for e in graph.edges:
        if e.kind in (EdgeKind.YES, EdgeKind.NO):
            origin = graph.nodes[e.from_id]
            if origin.kind is not NodeKind.DECISION_YN:
                out.append(Finding(
                    "V10", Severity.ERROR, e.locus(),
                    f"{e.kind.value} edge from {origin.kind.value} node"))


_CHECKS = (
    _check_v1_ids,
    _check_v2_start_stop,
    _check_v3_connectivity,
    _check_v4_binary_decisions,
    _check_v5_rank_uniqueness,
    _check_v6_properties,
    _check_v7_hubs,
    _check_v8_membership,
    _check_v9_dangling,
    _check_v10_yes_no_origin,
)


def validate(graph: Graph) -> list[Finding]:
    """Run every check; empty result means the graph is valid.

    Pure: the same graph always yields the identical, canonically ordered
    finding list.
    """
    findings: list[Finding] = []
    for check in _CHECKS:
        check(graph, findings)
    findings.sort(key=lambda f: (f.code, f.locus, f.message))
    return findings


def errors_only(findings: list[Finding]) -> list[Finding]:
    return [f for f in findings if f.severity is Severity.ERROR]
