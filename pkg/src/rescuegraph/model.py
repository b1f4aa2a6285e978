"""Core data model for treatment graphs: typed nodes, typed edges, indices.

A treatment graph is a directed, cyclic, weakly connected property graph.
Nodes carry the treatment content (decisions, procedures, actions, displays),
edges carry either path semantics (priority-ranked advancement, yes/no
branches) or navigation semantics (path links, standard-procedure links,
associations, additional information).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

#: Lowest-priority rank sentinel; sorts after every numeric rank.
RN_RANK = "n"


class NodeKind(str, Enum):
    START = "start"
    STOP = "stop"
    BPR = "bpr"
    SAA = "saa"
    JUMP_BPR_HUB = "jumpBpr"
    JUMP_SAA_HUB = "jumpSaa"
    JUMP_DISEASE_GROUP_HUB = "jumpDiseaseGroup"
    DISEASE_GROUP = "diseaseGroup"
    DECISION_YN = "decisionYN"
    DECISION_OR = "decisionOR"
    PROCEDURE = "procedure"
    INVASIVE_PROCEDURE = "invasiveProcedure"
    ACTION = "action"
    DISPLAY = "display"
    WARNING = "warning"


class EdgeKind(str, Enum):
    PRIORITY = "R"
    YES = "yes"
    NO = "no"
    BPR_LINK = "bpr"
    SAA_LINK = "saa"
    ASSOCIATION = "association"
    ADDITIONAL_INFO = "additionalInformation"


#: Edge kinds that advance the treatment position.
PATH_EDGE_KINDS = frozenset({EdgeKind.PRIORITY, EdgeKind.YES, EdgeKind.NO})

#: Node kinds that act as jump hubs, with the kind they fan out to and the
#: link-edge kind the opposed pairs must use.
HUB_KINDS: dict[NodeKind, tuple[NodeKind, EdgeKind]] = {
    NodeKind.JUMP_BPR_HUB: (NodeKind.BPR, EdgeKind.BPR_LINK),
    NodeKind.JUMP_SAA_HUB: (NodeKind.SAA, EdgeKind.SAA_LINK),
    NodeKind.JUMP_DISEASE_GROUP_HUB: (NodeKind.DISEASE_GROUP, EdgeKind.ASSOCIATION),
}

#: Node kinds a session may be created at.
ENTRY_KINDS = frozenset({NodeKind.START, NodeKind.BPR, NodeKind.DISEASE_GROUP})


class UnknownNodeError(KeyError):
    """Raised when an operation references a node id absent from the graph."""

    def __init__(self, node_id: str):
        super().__init__(node_id)
        self.node_id = node_id

    def __str__(self) -> str:
        return f"unknown node id: {self.node_id!r}"


class StructuralError(RuntimeError):
    """A graph shape the engine cannot proceed on (should be caught by validation)."""


@dataclass
class Node:
    id: str
    name: str
    kind: NodeKind
    bpr: str | None = None
    saa: str | None = None
    d_type: str | None = None
    value: str | None = None
    min: float | None = None
    max: float | None = None
    unit: str | None = None
    range_branch: str | None = None

    def path_label(self) -> str | None:
        """Treatment-path membership label; bpr takes precedence over saa."""
        return self.bpr if self.bpr is not None else self.saa


@dataclass
class Edge:
    from_id: str
    to_id: str
    kind: EdgeKind
    rank: int | str | None = None  # int >= 1, RN_RANK, or None for non-priority kinds

    def is_path(self) -> bool:
        return self.kind in PATH_EDGE_KINDS

    def locus(self) -> str:
        return f"{self.from_id}->{self.to_id}"


@dataclass
class GraphMeta:
    name: str
    version: str


@dataclass
class RelatedLinks:
    """Non-path out-edges of a node, grouped by kind, in declaration order."""

    bpr: list[tuple[Edge, "Node"]] = field(default_factory=list)
    saa: list[tuple[Edge, "Node"]] = field(default_factory=list)
    association: list[tuple[Edge, "Node"]] = field(default_factory=list)
    additional_info: list[tuple[Edge, "Node"]] = field(default_factory=list)


@dataclass
class EntryPoints:
    start: Node
    bprs: list[Node]
    saas: list[Node]
    disease_groups: list[Node]


def _path_order_key(edge: Edge, index: int) -> tuple:
    """Total order over path edges: yes, no, R1..Rk ascending, Rn last.

    Declaration index breaks residual ties so the order is always total,
    even on graphs the validator would reject for duplicate ranks.
    """
    if edge.kind is EdgeKind.YES:
        return (0, 0, index)
    if edge.kind is EdgeKind.NO:
        return (1, 0, index)
    if edge.rank == RN_RANK:
        return (3, 0, index)
    return (2, edge.rank, index)


class Graph:
    """Immutable directed property graph. Do not mutate after construction.

    Instances are built by the parser (see graphio) and are safe to share
    across threads; every accessor is read-only.
    """

    def __init__(self, meta: GraphMeta, nodes: list[Node], edges: list[Edge]):
        self.meta = meta
        self.nodes: dict[str, Node] = {n.id: n for n in nodes}
        if len(self.nodes) != len(nodes):
            raise ValueError("duplicate node ids passed to Graph")
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.out_index: dict[str, tuple[Edge, ...]] = {}
        self.in_index: dict[str, tuple[Edge, ...]] = {}
        out: dict[str, list[Edge]] = {n.id: [] for n in nodes}
        inc: dict[str, list[Edge]] = {n.id: [] for n in nodes}
        for e in self.edges:
            if e.from_id not in self.nodes or e.to_id not in self.nodes:
                raise ValueError(f"dangling edge {e.locus()}")
            out[e.from_id].append(e)
            inc[e.to_id].append(e)
        self.out_index = {k: tuple(v) for k, v in out.items()}
        self.in_index = {k: tuple(v) for k, v in inc.items()}

    def __eq__(self, other: object) -> bool:
        # Indices are derived data; equality is over meta, nodes and edges.
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.meta == other.meta
            and self.nodes == other.nodes
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return (
            f"Graph({self.meta.name!r} v{self.meta.version}, "
            f"{len(self.nodes)} nodes, {len(self.edges)} edges)"
        )

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def out_edges_ordered(self, node_id: str) -> list[tuple[Edge, Node]]:
        """Path out-edges of a node in display/advancement order.

        Priority edges come in ascending rank with the Rn sentinel last;
        yes sorts before no. Non-path edges are excluded (see related_links).
        """
        self.node(node_id)
        indexed = [(e, i) for i, e in enumerate(self.out_index[node_id]) if e.is_path()]
        indexed.sort(key=lambda pair: _path_order_key(pair[0], pair[1]))
        return [(e, self.nodes[e.to_id]) for e, _ in indexed]

    def related_links(self, node_id: str) -> RelatedLinks:
        """Non-path out-edges grouped by kind, each in declaration order."""
        self.node(node_id)
        links = RelatedLinks()
        groups = {
            EdgeKind.BPR_LINK: links.bpr,
            EdgeKind.SAA_LINK: links.saa,
            EdgeKind.ASSOCIATION: links.association,
            EdgeKind.ADDITIONAL_INFO: links.additional_info,
        }
        for e in self.out_index[node_id]:
            group = groups.get(e.kind)
            if group is not None:
                group.append((e, self.nodes[e.to_id]))
        return links

    def entry_points(self) -> EntryPoints:
        """Start node plus the name-sorted path/procedure/group entry lists."""
        starts = [n for n in self.nodes.values() if n.kind is NodeKind.START]
        if len(starts) != 1:
            raise StructuralError(f"graph has {len(starts)} start nodes, expected 1")
        by_name = lambda n: (n.name, n.id)  # noqa: E731
        return EntryPoints(
            start=starts[0],
            bprs=sorted((n for n in self.nodes.values() if n.kind is NodeKind.BPR), key=by_name),
            saas=sorted((n for n in self.nodes.values() if n.kind is NodeKind.SAA), key=by_name),
            disease_groups=sorted(
                (n for n in self.nodes.values() if n.kind is NodeKind.DISEASE_GROUP), key=by_name
            ),
        )

    def nodes_of_kind(self, kind: NodeKind) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind is kind]
