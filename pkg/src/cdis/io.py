"""JSON and Graphviz DOT serialization for graphs, MAGs, PAGs and twin graphs."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import DataError, MalformedGraph
from .fci import Pag
from .graph import ARROW, CIRCLE, TAIL, Dag, DagWithSelection, Mark, MixedGraph, VertexKind
from .twin import TwinGraph

__all__ = [
    "load_json",
    "read_graph",
    "graph_from_json",
    "mixed_to_json",
    "mixed_from_json",
    "dag_to_dot",
    "mixed_to_dot",
    "twin_to_dot",
    "write_atomic",
]


def load_json(path: str | os.PathLike):
    """Parse a JSON file, reporting syntax errors with line and column."""
    path = Path(path)
    text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        line = lines[exc.lineno - 1] if exc.lineno <= len(lines) else ""
        raise DataError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}\n  {line}") from exc


def graph_from_json(obj) -> DagWithSelection:
    if not isinstance(obj, dict) or "d" not in obj or "edges" not in obj:
        raise MalformedGraph('graph JSON needs keys "d" and "edges" (and optionally "t")')
    return DagWithSelection.from_json(obj)


def read_graph(path: str | os.PathLike) -> DagWithSelection:
    return graph_from_json(load_json(path))


def mixed_to_json(m: MixedGraph | Pag) -> dict:
    if isinstance(m, Pag):
        return m.to_json()
    return {
        "vertices": list(m.names),
        "edges": [{"i": i, "j": j, "mark_i": a.value, "mark_j": b.value} for i, j, a, b in m.edges()],
    }


def mixed_from_json(obj) -> MixedGraph:
    try:
        names = [str(v) for v in obj["vertices"]]
        edges = [(int(e["i"]), int(e["j"]), Mark(e["mark_i"]), Mark(e["mark_j"])) for e in obj["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedGraph(f"bad mixed-graph JSON: {exc}") from exc
    kinds = [VertexKind.ZETA if n == "zeta" else VertexKind.OBSERVED for n in names]
    return MixedGraph(names, edges, kinds)


_ARROWHEAD = {TAIL: "none", ARROW: "normal", CIRCLE: "odot"}


def _q(s: str) -> str:
    return '"' + s.replace('"', '\\"') + '"'


def _header(name: str, comment: str | None) -> list[str]:
    lines = [f"// {c}" for c in (comment or "").splitlines() if c]
    return lines + [f"digraph {_q(name)} {{"]


def dag_to_dot(g: Dag, name: str = "G", comment: str | None = None) -> str:
    lines = _header(name, comment)
    for v in range(g.n):
        shape = "box" if g.kinds[v] is VertexKind.SELECTION else "ellipse"
        lines.append(f"  {v} [label={_q(g.names[v])}, shape={shape}];")
    for a, b in g.sorted_edges():
        lines.append(f"  {a} -> {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def mixed_to_dot(m: MixedGraph | Pag, name: str = "M", comment: str | None = None) -> str:
    """Each edge drawn once with ``dir=both`` and mark-specific arrowheads."""
    if isinstance(m, Pag):
        m = m.snapshot()
    lines = _header(name, comment)
    for v in range(m.n):
        shape = "diamond" if m.kinds[v] is VertexKind.ZETA else "ellipse"
        lines.append(f"  {v} [label={_q(m.names[v])}, shape={shape}];")
    for i, j, a, b in m.edges():
        lines.append(f"  {i} -> {j} [dir=both, arrowtail={_ARROWHEAD[a]}, arrowhead={_ARROWHEAD[b]}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def twin_to_dot(tw: TwinGraph, name: str = "twin", comment: str | None = None) -> str:
    """Twin graph with the observed world and the basal world in separate clusters."""
    g = tw.graph
    kinds = g.kinds
    reality = [v for v in range(g.n) if kinds[v] is VertexKind.OBSERVED]
    basal = [v for v in range(g.n) if kinds[v] in (VertexKind.COUNTERFACTUAL, VertexKind.SELECTION)]
    other = [v for v in range(g.n) if v not in reality and v not in basal]
    lines = _header(name, comment)

    def node(v: int) -> str:
        shape = {VertexKind.SELECTION: "box", VertexKind.ZETA: "diamond",
                 VertexKind.NOISE: "plaintext"}.get(kinds[v], "ellipse")
        return f"{v} [label={_q(g.names[v])}, shape={shape}];"

    lines.append('  subgraph "cluster_reality" {')
    lines.append('    label="observed world";')
    lines += [f"    {node(v)}" for v in reality]
    lines.append("  }")
    lines.append('  subgraph "cluster_basal" {')
    lines.append('    label="basal world (selection)";')
    lines += [f"    {node(v)}" for v in basal]
    lines.append("  }")
    lines += [f"  {node(v)}" for v in other]
    for a, b in g.sorted_edges():
        style = ", style=dashed" if kinds[a] is VertexKind.NOISE else ""
        lines.append(f"  {a} -> {b}{' [' + style[2:] + ']' if style else ''};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
