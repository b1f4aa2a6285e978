"""Graph definition file parsing and canonical serialization.

File format: a UTF-8 JSON document

    {
      "meta":  {"name": str, "version": str},
      "nodes": [{"id", "name", "kind",
                 optional "bpr", "saa", "d_type", "value",
                 "min", "max", "unit", "range_branch"}, ...],
      "edges": [{"from", "to", "kind", optional "rank"}, ...]
    }

Node kinds: start, stop, bpr, saa, jumpBpr, jumpSaa, jumpDiseaseGroup,
diseaseGroup, decisionYN, decisionOR, procedure, invasiveProcedure, action,
display, warning.

Edge kinds: "R" (requires "rank": integer >= 1 or the string "n" for the
lowest-priority sentinel), "yes", "no", "bpr", "saa", "association",
"additionalInformation". Only "R" edges may carry a rank.

An optional top-level "questionnaire" section configures situation
detection; it is ignored here and read by the situation module.

Serialization is canonical: fixed key order, absent optional fields are
omitted (never emitted as null), two-space indent, trailing newline.
Parsing then serializing is a fixed point.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import RN_RANK, Edge, EdgeKind, Graph, GraphMeta, Node, NodeKind

_TOP_KEYS = {"meta", "nodes", "edges", "questionnaire"}
_NODE_KEYS = ("id", "name", "kind", "bpr", "saa", "d_type", "value",
              "min", "max", "unit", "range_branch")
_NODE_STR_KEYS = ("bpr", "saa", "d_type", "value", "unit")
_EDGE_KEYS = ("from", "to", "kind", "rank")

_NODE_KINDS = {k.value: k for k in NodeKind}


class GraphFormatError(ValueError):
    """A definition document that cannot be turned into a graph.

    ``line`` and ``column`` are set for JSON syntax errors; semantic errors
    identify the offending node or edge in the message instead.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise GraphFormatError(message)


def _parse_node(raw: object, index: int) -> Node:
    where = f"nodes[{index}]"
    _require(isinstance(raw, dict), f"{where}: node must be an object")
    unknown = set(raw) - set(_NODE_KEYS)
    _require(not unknown, f"{where}: unknown node keys {sorted(unknown)}")
    node_id = raw.get("id")
    _require(isinstance(node_id, str) and node_id != "", f"{where}: missing or empty id")
    where = f"node {node_id!r}"
    name = raw.get("name")
    _require(isinstance(name, str), f"{where}: missing name")
    kind_raw = raw.get("kind")
    kind = _NODE_KINDS.get(kind_raw)  # type: ignore[arg-type]
    _require(kind is not None, f"{where}: unknown node kind {kind_raw!r}")
    for key in _NODE_STR_KEYS:
        if key in raw:
            _require(isinstance(raw[key], str), f"{where}: {key} must be a string")
    for key in ("min", "max"):
        if key in raw:
            _require(isinstance(raw[key], (int, float)) and not isinstance(raw[key], bool),
                     f"{where}: {key} must be a number")
    if "range_branch" in raw:
        _require(raw["range_branch"] in ("yes", "no"),
                 f"{where}: range_branch must be 'yes' or 'no'")
    node = Node(
        id=node_id,
        name=name,
        kind=kind,  # type: ignore[arg-type]
        bpr=raw.get("bpr"),
        saa=raw.get("saa"),
        d_type=raw.get("d_type"),
        value=raw.get("value"),
        min=raw.get("min"),
        max=raw.get("max"),
        unit=raw.get("unit"),
        range_branch=raw.get("range_branch"),
    )
    if node.min is not None and node.max is not None:
        _require(node.min <= node.max,
                 f"{where}: min {node.min} exceeds max {node.max}")
    return node


def _parse_edge(raw: object, index: int, node_ids: set[str]) -> Edge:
    where = f"edges[{index}]"
    _require(isinstance(raw, dict), f"{where}: edge must be an object")
    unknown = set(raw) - set(_EDGE_KEYS)
    _require(not unknown, f"{where}: unknown edge keys {sorted(unknown)}")
    from_id, to_id = raw.get("from"), raw.get("to")
    _require(isinstance(from_id, str) and isinstance(to_id, str),
             f"{where}: missing from/to")
    where = f"edge {from_id}->{to_id}"
    _require(from_id in node_ids, f"{where}: references unknown node id {from_id!r}")
    _require(to_id in node_ids, f"{where}: references unknown node id {to_id!r}")
    kind_raw = raw.get("kind")
    try:
        kind = EdgeKind(kind_raw)
    except ValueError:
        raise GraphFormatError(f"{where}: unknown edge kind {kind_raw!r}") from None
    rank = raw.get("rank")
    if kind is EdgeKind.PRIORITY:
        valid = rank == RN_RANK or (
            isinstance(rank, int) and not isinstance(rank, bool) and rank >= 1
        )
        _require(valid, f"{where}: R edge needs rank >= 1 or \"{RN_RANK}\", got {rank!r}")
    else:
        _require(rank is None, f"{where}: rank is only valid on R edges")
    return Edge(from_id=from_id, to_id=to_id, kind=kind, rank=rank)


def parse_graph(document: str) -> Graph:
    """Parse a definition document into a fully indexed graph.

    Raises GraphFormatError on syntax errors (with line/column), duplicate
    node ids, edges referencing unknown ids, unknown kinds, invalid ranks
    and min > max.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(exc.msg, line=exc.lineno, column=exc.colno) from None
    _require(isinstance(doc, dict), "top level must be an object")
    unknown = set(doc) - _TOP_KEYS
    _require(not unknown, f"unknown top-level keys {sorted(unknown)}")
    for key in ("meta", "nodes", "edges"):
        _require(key in doc, f"missing top-level key {key!r}")
    meta = doc["meta"]
    _require(isinstance(meta, dict) and isinstance(meta.get("name"), str)
             and isinstance(meta.get("version"), str),
             "meta must carry string name and version")
    _require(isinstance(doc["nodes"], list), "nodes must be a list")
    _require(isinstance(doc["edges"], list), "edges must be a list")

    nodes: list[Node] = []
    seen: set[str] = set()
    for i, raw in enumerate(doc["nodes"]):
        node = _parse_node(raw, i)
        _require(node.id not in seen, f"duplicate node id {node.id!r}")
        seen.add(node.id)
        nodes.append(node)
    edges = [_parse_edge(raw, i, seen) for i, raw in enumerate(doc["edges"])]
    return Graph(GraphMeta(name=meta["name"], version=meta["version"]), nodes, edges)


def _node_to_dict(node: Node) -> dict:
    out: dict = {"id": node.id, "name": node.name, "kind": node.kind.value}
    for key in ("bpr", "saa", "d_type", "value", "min", "max", "unit", "range_branch"):
        val = getattr(node, key)
        if val is not None:
            out[key] = val
    return out


def _edge_to_dict(edge: Edge) -> dict:
    out: dict = {"from": edge.from_id, "to": edge.to_id, "kind": edge.kind.value}
    if edge.rank is not None:
        out["rank"] = edge.rank
    return out


def serialize_graph(graph: Graph) -> str:
    """Render a graph to canonical definition text (see module docstring)."""
    doc = {
        "meta": {"name": graph.meta.name, "version": graph.meta.version},
        "nodes": [_node_to_dict(n) for n in graph.nodes.values()],
        "edges": [_edge_to_dict(e) for e in graph.edges],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def load_graph(path: str | Path) -> Graph:
    """Read and parse a definition file."""
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def corpus_path() -> Path:
    """Path of the bundled sample corpus."""
    return Path(__file__).parent / "data" / "corpus.json"


def corpus_manifest_path() -> Path:
    """Path of the bundled corpus count manifest."""
    return Path(__file__).parent / "data" / "corpus.manifest.json"
