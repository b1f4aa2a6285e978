"""Render-stable reports: session transcripts, validation findings, graph
statistics, and figure/CSV bundles for offline review.

Transcript lines number the audit entries instead of printing timestamps,
so identical runs produce byte-identical output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Optional

from .validate import Finding, GraphStats


def render_transcript(audit: dict) -> str:
    """One line per audit entry: seq, action, node, then context suffixes."""
    lines = []
    for entry in audit["entries"]:
        line = f"{entry['seq']:02d} {entry['action']:<11} {entry['node']}"
        if entry.get("choice") is not None:
            line += f" choice={entry['choice']}"
        value = entry.get("value")
        if value is not None:
            line += f" value={value['parameter']}:{value['reading']:g}"
            if value.get("unit"):
                line += value["unit"]
            if value.get("in_range") is not None:
                flag = "true" if value["in_range"] else "false"
                line += f" in_range={flag}"
        if entry.get("to") is not None:
            line += f" -> {entry['to']}"
        lines.append(line)
    return "\n".join(lines) + "\n" if lines else ""


def render_findings(findings: Iterable[Finding], fmt: str = "text") -> str:
    findings = list(findings)
    if fmt == "structured":
        return json.dumps([{"code": f.code, "severity": f.severity.value,
                            "locus": f.locus, "message": f.message}
                           for f in findings], indent=2) + "\n"
    if not findings:
        return "no findings\n"
    return "\n".join(f.render() for f in findings) + "\n"


def render_stats(stats: GraphStats, fmt: str = "text") -> str:
    if fmt == "structured":
        return json.dumps(stats.to_dict(), indent=2) + "\n"
    lines = [f"nodes: {stats.node_count}",
             f"edges: {stats.edge_count}",
             f"bpr paths: {stats.bpr_count}",
             f"saa procedures: {stats.saa_count}",
             "nodes by kind:"]
    for kind, count in sorted(stats.nodes_by_kind.items()):
        lines.append(f"  {kind}: {count}")
    lines.append("edges by kind:")
    for kind, count in sorted(stats.edges_by_kind.items()):
        lines.append(f"  {kind}: {count}")
    return "\n".join(lines) + "\n"


def _bar_figure(counts: dict[str, int], title: str, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    kinds = sorted(counts)
    values = [counts[k] for k in kinds]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(len(kinds)), values, color="#2f6f8f")
    ax.set_xticks(range(len(kinds)))
    ax.set_xticklabels(kinds, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_stats_report(stats: GraphStats, out_dir: str | Path) -> list[Path]:
    """stats.csv plus one bar chart per count table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "stats.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["section", "kind", "count"])
        writer.writerow(["total", "nodes", stats.node_count])
        writer.writerow(["total", "edges", stats.edge_count])
        writer.writerow(["total", "bpr", stats.bpr_count])
        writer.writerow(["total", "saa", stats.saa_count])
        for kind, count in sorted(stats.nodes_by_kind.items()):
            writer.writerow(["nodes_by_kind", kind, count])
        for kind, count in sorted(stats.edges_by_kind.items()):
            writer.writerow(["edges_by_kind", kind, count])
    nodes_png = out / "nodes_by_kind.png"
    edges_png = out / "edges_by_kind.png"
    _bar_figure(stats.nodes_by_kind, "Nodes by kind", nodes_png)
    _bar_figure(stats.edges_by_kind, "Edges by kind", edges_png)
    return [csv_path, nodes_png, edges_png]


def write_replay_report(audit: dict, out_dir: str | Path,
                        vitals_csv: Optional[str] = None) -> list[Path]:
    """transcript.txt, audit.csv, and a vitals timeline when data exists."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    transcript_path = out / "transcript.txt"
    transcript_path.write_text(render_transcript(audit), encoding="utf-8")

    audit_path = out / "audit.csv"
    with audit_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["seq", "action", "node", "choice", "to",
                         "parameter", "reading", "unit", "in_range"])
        for entry in audit["entries"]:
            value = entry.get("value") or {}
            writer.writerow([
                entry["seq"], entry["action"], entry["node"],
                entry.get("choice", ""), entry.get("to", ""),
                value.get("parameter", ""), value.get("reading", ""),
                value.get("unit", ""), value.get("in_range", ""),
            ])
    paths = [transcript_path, audit_path]
    if vitals_csv:
        timeline = _vitals_timeline(vitals_csv, out / "vitals_timeline.png")
        if timeline is not None:
            paths.append(timeline)
    return paths


def _vitals_timeline(vitals_csv: str, path: Path) -> Optional[Path]:
    from .vitals import parse_csv

    records = parse_csv(vitals_csv)
    if not records:
        return None
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    by_series: dict[tuple[str, str], list] = {}
    for record in records:
        by_series.setdefault((record.patient_id, record.parameter),
                             []).append(record)
    fig, ax = plt.subplots(figsize=(8, 4))
    for (patient, parameter), series in sorted(by_series.items()):
        xs = [r.timestamp_ms / 1000.0 for r in series]
        ys = [r.reading for r in series]
        ax.plot(xs, ys, marker="o", label=f"{patient} {parameter}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("reading")
    ax.set_title("Vitals timeline")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
