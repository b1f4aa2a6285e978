"""Treatment-path knowledge graphs with a guided session engine.

The package splits into a graph layer (model, file format, validation), an
execution layer (sessions, vitals middleware, situation scoring, message
bus, runtime wiring) and two frontends (CLI and HTTP service).
"""

from .graphio import (GraphFormatError, corpus_manifest_path, corpus_path,
                      load_graph, parse_graph, serialize_graph)
from .model import (Edge, EdgeKind, Graph, Node, NodeKind, StructuralError,
                    UnknownNodeError)
from .session import (AttachedValue, AuditEntry, Prompt, PromptKind,
                      PromptOption, Session, SessionEngine, SessionStatus)
from .validate import Finding, GraphStats, Severity, stats, validate
from .vitals import ValueRequest, ValueResponse, VitalsRecord, VitalsStore

__all__ = [
    "AttachedValue", "AuditEntry", "Edge", "EdgeKind", "Finding",
    "Graph", "GraphFormatError", "GraphStats", "Node", "NodeKind",
    "Prompt", "PromptKind", "PromptOption", "Session", "SessionEngine",
    "SessionStatus", "Severity", "StructuralError", "UnknownNodeError",
    "ValueRequest", "ValueResponse", "VitalsRecord", "VitalsStore",
    "corpus_manifest_path", "corpus_path", "load_graph", "parse_graph",
    "serialize_graph", "stats", "validate",
]

__version__ = "0.1.0"
