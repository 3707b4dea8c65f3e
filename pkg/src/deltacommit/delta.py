"""Delta graphs: set algebra between two program versions.

Given the CPGs of two versions, the delta keeps the added and deleted
edges/vertices plus the common edges that share an endpoint with a
change (one hop only; wider context dilutes the signal). Edge identity
is (src key, dst key, type, label); vertex identity is the content key.

The delta also linearizes to a bounded, marker-tagged token sequence:
all added tokens, then deleted, then context, each block sorted by
(line, ordinal, kind, code) and deduplicated.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

from .cpg.interchange import (
    FormatError,
    _check_fields,
    _parse_edge,
    _parse_vertex,
    graph_to_dict,
)
from .cpg.model import (
    CpgEdge,
    CpgGraph,
    CpgVertex,
    GraphIntegrityError,
    VertexKey,
    vertex_sort_key,
)


class Marker(enum.Enum):
    ADD = "ADD"
    DEL = "DEL"
    CTX = "CTX"


DELTA_CLASSES = ("added", "deleted", "context")


@dataclass
class DeltaGraph:
    added_edges: set[CpgEdge] = field(default_factory=set)
    deleted_edges: set[CpgEdge] = field(default_factory=set)
    context_edges: set[CpgEdge] = field(default_factory=set)
    added_vertices: dict[VertexKey, CpgVertex] = field(default_factory=dict)
    deleted_vertices: dict[VertexKey, CpgVertex] = field(default_factory=dict)
    context_vertices: dict[VertexKey, CpgVertex] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not (
            self.added_edges
            or self.deleted_edges
            or self.context_edges
            or self.added_vertices
            or self.deleted_vertices
            or self.context_vertices
        )

    @property
    def all_edges(self) -> set[CpgEdge]:
        return self.added_edges | self.deleted_edges | self.context_edges

    def vertex(self, key: VertexKey) -> CpgVertex:
        for pool in (self.added_vertices, self.deleted_vertices, self.context_vertices):
            if key in pool:
                return pool[key]
        raise KeyError(key)

    def stats(self) -> dict[str, int]:
        return {
            "added_edges": len(self.added_edges),
            "deleted_edges": len(self.deleted_edges),
            "context_edges": len(self.context_edges),
            "added_vertices": len(self.added_vertices),
            "deleted_vertices": len(self.deleted_vertices),
            "context_vertices": len(self.context_vertices),
        }


@dataclass
class GraphUnion:
    edges: set[CpgEdge]
    vertices: dict[VertexKey, CpgVertex]


@dataclass
class LinearizedChange:
    tokens: list[tuple[Marker, str]]
    truncated: bool

    def to_text(self) -> str:
        return " ".join(f"{m.value}:{tok}" for m, tok in self.tokens)


def common_graph(
    g1: CpgGraph, g2: CpgGraph
) -> tuple[set[CpgEdge], dict[VertexKey, CpgVertex]]:
    """Exact intersection of edge and vertex sets; symmetric in content.

    Common vertices are reported with the second version's line numbers
    (keys carry no position, so either copy is valid).
    """
    edges = g1.edges & g2.edges
    vertices = {k: g2.vertices[k] for k in g1.vertices.keys() & g2.vertices.keys()}
    return edges, vertices


def deleted_graph(
    g1: CpgGraph, g2: CpgGraph
) -> tuple[set[CpgEdge], dict[VertexKey, CpgVertex]]:
    edges = g1.edges - g2.edges
    vertices = {k: v for k, v in g1.vertices.items() if k not in g2.vertices}
    return edges, vertices


def added_graph(
    g1: CpgGraph, g2: CpgGraph
) -> tuple[set[CpgEdge], dict[VertexKey, CpgVertex]]:
    return deleted_graph(g2, g1)


def graph_union(g1: CpgGraph, g2: CpgGraph) -> GraphUnion:
    vertices = dict(g1.vertices)
    vertices.update(g2.vertices)
    return GraphUnion(edges=g1.edges | g2.edges, vertices=vertices)


def restrict_context(
    common_edges: set[CpgEdge],
    added_edges: set[CpgEdge],
    deleted_edges: set[CpgEdge],
) -> set[CpgEdge]:
    """Common edges sharing at least one endpoint with a changed edge."""
    touched: set[VertexKey] = set()
    for e in added_edges | deleted_edges:
        touched.add(e.src)
        touched.add(e.dst)
    return {e for e in common_edges if e.src in touched or e.dst in touched}


def build_delta(g1: CpgGraph, g2: CpgGraph) -> DeltaGraph:
    """Compose the set algebra into a delta graph.

    Context vertices are only those common vertices that appear as an
    endpoint of a retained (added, deleted, or context) edge.
    """
    common_e, common_v = common_graph(g1, g2)
    del_e, del_v = deleted_graph(g1, g2)
    add_e, add_v = added_graph(g1, g2)
    ctx_e = restrict_context(common_e, add_e, del_e)

    endpoint_keys: set[VertexKey] = set()
    for e in add_e | del_e | ctx_e:
        endpoint_keys.add(e.src)
        endpoint_keys.add(e.dst)
    ctx_v = {k: v for k, v in common_v.items() if k in endpoint_keys}

    return DeltaGraph(
        added_edges=add_e,
        deleted_edges=del_e,
        context_edges=ctx_e,
        added_vertices=add_v,
        deleted_vertices=del_v,
        context_vertices=ctx_v,
    )


def linearize(delta: DeltaGraph, max_input_len: int = 512) -> LinearizedChange:
    """Flatten a delta to (marker, token) pairs, added -> deleted -> context.

    Within a block, vertices are ordered by (line, ordinal, kind, code);
    duplicate (marker, token) pairs keep their first occurrence only, and
    vertices with no code emit nothing. The sequence is cut whole-token at
    the cap, so a smaller cap always yields a prefix of a larger one.
    """
    if max_input_len < 3:
        raise ValueError("max_input_len must be at least 3")
    blocks = (
        (Marker.ADD, delta.added_vertices),
        (Marker.DEL, delta.deleted_vertices),
        (Marker.CTX, delta.context_vertices),
    )
    tokens: list[tuple[Marker, str]] = []
    truncated = False
    for marker, vertices in blocks:
        seen: set[str] = set()
        for v in sorted(vertices.values(), key=vertex_sort_key):
            if not v.code or v.code in seen:
                continue
            seen.add(v.code)
            if len(tokens) >= max_input_len:
                truncated = True
                break
            tokens.append((marker, v.code))
        if truncated:
            break
    return LinearizedChange(tokens=tokens, truncated=truncated)


# -- serialization --------------------------------------------------------
#
# Deltas reuse the graph interchange layout with one extra field on both
# edges and vertices: "delta_class" in {"added", "deleted", "context"}.
# Edges alone cannot recover vertex classes (an isolated added vertex has
# no incident edge), hence the vertex-level field.


def delta_to_dict(delta: DeltaGraph) -> dict:
    graph = CpgGraph()
    vclass: dict[VertexKey, str] = {}
    for name, pool in (
        ("added", delta.added_vertices),
        ("deleted", delta.deleted_vertices),
        ("context", delta.context_vertices),
    ):
        for k, v in pool.items():
            graph.vertices[k] = v
            vclass[k] = name
    eclass: dict[CpgEdge, str] = {}
    for name, pool in (
        ("added", delta.added_edges),
        ("deleted", delta.deleted_edges),
        ("context", delta.context_edges),
    ):
        for e in pool:
            graph.edges.add(e)
            eclass[e] = name

    doc = graph_to_dict(graph)
    key_order = sorted(graph.vertices, key=lambda k: vertex_sort_key(graph.vertices[k]))
    for obj, key in zip(doc["vertices"], key_order):
        obj["delta_class"] = vclass[key]
    index = {key: i for i, key in enumerate(key_order)}
    edges_sorted = sorted(
        graph.edges,
        key=lambda e: (index[e.src], index[e.dst], e.etype.value, e.label or ""),
    )
    for obj, e in zip(doc["edges"], edges_sorted):
        obj["delta_class"] = eclass[e]
    return doc


def delta_from_dict(doc: Any) -> DeltaGraph:
    if not isinstance(doc, dict):
        raise FormatError("document is not an object")
    _check_fields(doc, {"vertices", "edges"}, {"vertices", "edges"}, "$")
    if not isinstance(doc["vertices"], list) or not isinstance(doc["edges"], list):
        raise FormatError("$.vertices and $.edges must be arrays")

    delta = DeltaGraph()
    vertices = []
    pools = {
        "added": delta.added_vertices,
        "deleted": delta.deleted_vertices,
        "context": delta.context_vertices,
    }
    seen: set[VertexKey] = set()
    for i, obj in enumerate(doc["vertices"]):
        where = f"vertices[{i}]"
        if not isinstance(obj, dict):
            raise FormatError(f"{where} is not an object")
        cls = obj.get("delta_class")
        if cls not in DELTA_CLASSES:
            raise FormatError(f"bad value at {where}.delta_class: {cls!r}")
        core = {k: v for k, v in obj.items() if k != "delta_class"}
        v = _parse_vertex(core, where)
        if v.key in seen:
            raise GraphIntegrityError(f"{where} duplicates an existing vertex")
        seen.add(v.key)
        vertices.append(v)
        pools[cls][v.key] = v

    epools = {
        "added": delta.added_edges,
        "deleted": delta.deleted_edges,
        "context": delta.context_edges,
    }
    for i, obj in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        edge = _parse_edge(obj, vertices, where, extra={"delta_class": DELTA_CLASSES})
        epools[obj["delta_class"]].add(edge)
    return delta


def export_delta(delta: DeltaGraph, path: Union[str, Path]) -> None:
    Path(path).write_text(
        json.dumps(delta_to_dict(delta), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def import_delta(path: Union[str, Path]) -> DeltaGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return delta_from_dict(doc)
