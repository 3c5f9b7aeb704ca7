"""JSON graph documents and DOT export.

The document format::

    {"vertices": [...],
     "directed": [[tail, head], ...],
     "bidirected": [[a, b], ...],
     "clusters": {name: [members] | {"size": n} | {}}}

``clusters`` is present exactly when the document describes a cluster graph;
its keys must then equal the vertex list. A value of ``{}`` declares a
cluster whose size is unknown. Canonical serialization sorts edge lists
lexicographically.
"""

from __future__ import annotations

import json
import os

from .graphs import (
    ALLOW_CLUSTER_LEVEL,
    FORBID_ALL,
    ClusterGraph,
    ClusterPartition,
    GraphError,
    MixedGraph,
    underlying,
)


class ParseError(ValueError):
    """A graph document failed schema validation."""


def parse_graph(source: str | os.PathLike):
    """Parse a JSON graph document from a path or a literal JSON string.

    Returns a ClusterGraph when the document declares clusters, else a
    MixedGraph. Raises ParseError with line/column diagnostics on bad JSON
    and with a named offence on schema violations.
    """
    text = source
    if not isinstance(source, str) or not source.lstrip().startswith("{"):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(
                f"cannot read graph document {str(source)[:80]!r}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return graph_from_dict(doc)


def graph_from_dict(doc) -> MixedGraph | ClusterGraph:
    if not isinstance(doc, dict):
        raise ParseError("graph document must be a JSON object")
    unknown = set(doc) - {"vertices", "directed", "bidirected", "clusters"}
    if unknown:
        raise ParseError(f"unknown document keys {sorted(unknown)}")

    vertices = doc.get("vertices")
    if not isinstance(vertices, list) or not all(isinstance(v, str) for v in vertices):
        raise ParseError('"vertices" must be a list of strings')
    if not vertices:
        raise ParseError("empty graph")
    if len(set(vertices)) != len(vertices):
        raise ParseError("duplicate vertex names")

    def edge_list(key):
        raw = doc.get(key, [])
        if not isinstance(raw, list):
            raise ParseError(f'"{key}" must be a list of [a, b] pairs')
        pairs = []
        for item in raw:
            if (not isinstance(item, list) or len(item) != 2
                    or not all(isinstance(e, str) for e in item)):
                raise ParseError(f'"{key}" entry {item!r} is not a [a, b] pair')
            for endpoint in item:
                if endpoint not in vertices:
                    raise ParseError(f'"{key}" edge {item} has dangling vertex {endpoint!r}')
            pairs.append(tuple(item))
        return pairs

    directed = edge_list("directed")
    bidirected = edge_list("bidirected")

    if "clusters" not in doc:
        try:
            return MixedGraph(vertices, directed, bidirected, self_loop_policy=FORBID_ALL)
        except GraphError as exc:
            raise ParseError(str(exc)) from exc

    clusters_doc = doc["clusters"]
    if not isinstance(clusters_doc, dict):
        raise ParseError('"clusters" must be an object')
    if set(clusters_doc) != set(vertices):
        raise ParseError('"clusters" keys must equal the vertex list')
    members: dict[str, tuple[str, ...] | None] = {}
    sizes: dict[str, int] = {}
    for name in vertices:  # keep vertex declaration order
        value = clusters_doc[name]
        if isinstance(value, list):
            if not all(isinstance(m, str) for m in value):
                raise ParseError(f"cluster {name!r} members must be strings")
            members[name] = tuple(value)
        elif isinstance(value, dict):
            extra = set(value) - {"size"}
            if extra:
                raise ParseError(f"cluster {name!r} has unknown keys {sorted(extra)}")
            members[name] = None
            if "size" in value:
                if not isinstance(value["size"], int) or value["size"] < 1:
                    raise ParseError(f"cluster {name!r} size must be a positive integer")
                sizes[name] = value["size"]
        else:
            raise ParseError(f"cluster {name!r} must map to a member list or an object")
    try:
        graph = MixedGraph(vertices, directed, bidirected,
                           self_loop_policy=ALLOW_CLUSTER_LEVEL)
        return ClusterGraph(graph, ClusterPartition(members, sizes))
    except GraphError as exc:
        raise ParseError(str(exc)) from exc


def graph_to_dict(g) -> dict:
    """Canonical document for a graph: edge lists sorted lexicographically."""
    mg = underlying(g)
    doc = {
        "vertices": list(mg.vertices),
        "directed": [list(e) for e in sorted(mg.directed_edges)],
        "bidirected": [list(e) for e in sorted(mg.bidirected_edges)],
    }
    if isinstance(g, ClusterGraph):
        clusters = {}
        for name in g.vertices:
            members = g.partition.members(name)
            if members is not None:
                clusters[name] = sorted(members)
            else:
                size = g.partition.size_of(name)
                clusters[name] = {} if size is None else {"size": size}
        doc["clusters"] = clusters
    return doc


def serialize_graph(g) -> str:
    return json.dumps(graph_to_dict(g), indent=2) + "\n"


def _dot_quote(name: str) -> str:
    return '"' + name.replace('"', '\\"') + '"'


def to_dot(g, name: str = "G", directed_attrs=None, bidirected_attrs=None) -> str:
    """DOT export: solid arrows for directed edges, dashed double-arrow
    edges for bidirected ones (the paper's drawing convention).

    ``directed_attrs``/``bidirected_attrs`` map edge pairs to extra DOT
    attribute strings (used to highlight hedge forests).
    """
    mg = underlying(g)
    directed_attrs = directed_attrs or {}
    bidirected_attrs = bidirected_attrs or {}
    lines = [f"digraph {_dot_quote(name)} {{"]
    for v in mg.vertices:
        shape = ' [shape=box]' if mg.kind_of(v) == "intervention" else ''
        lines.append(f"  {_dot_quote(v)}{shape};")
    for t, h in sorted(mg.directed_edges):
        extra = directed_attrs.get((t, h), "")
        attrs = f" [{extra}]" if extra else ""
        lines.append(f"  {_dot_quote(t)} -> {_dot_quote(h)}{attrs};")
    for a, b in sorted(mg.bidirected_edges):
        extra = bidirected_attrs.get((a, b), "")
        attrs = f"dir=both, style=dashed" + (f", {extra}" if extra else "")
        lines.append(f"  {_dot_quote(a)} -> {_dot_quote(b)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
