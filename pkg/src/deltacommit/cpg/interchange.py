"""JSON interchange for code property graphs.

The on-disk form is a single object:

    {"vertices": [{"kind", "code", "signature", "ordinal", "line"}, ...],
     "edges": [{"src_index", "dst_index", "etype", "label"}, ...]}

Edge endpoints are positions in the vertices array; vertex keys are
recomputed on import, so any producer that can fill those five fields can
feed graphs in. Unknown fields are rejected to catch schema drift early.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Union

from ..errors import DeltaCommitError
from .model import (
    CpgEdge,
    CpgGraph,
    CpgVertex,
    EdgeType,
    GraphIntegrityError,
    VertexKind,
    make_key,
    vertex_sort_key,
)


class FormatError(DeltaCommitError):
    """Malformed interchange document; the message names the field path."""


VERTEX_FIELDS = {"kind", "code", "signature", "ordinal", "line"}
EDGE_FIELDS = {"src_index", "dst_index", "etype", "label"}


def _check_fields(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    for name in obj:
        if name not in allowed:
            raise FormatError(f"unknown field {where}.{name}")
    for name in required:
        if name not in obj:
            raise FormatError(f"missing field {where}.{name}")


def _parse_vertex(obj: Any, where: str) -> CpgVertex:
    if not isinstance(obj, dict):
        raise FormatError(f"{where} is not an object")
    _check_fields(obj, VERTEX_FIELDS, VERTEX_FIELDS, where)
    try:
        kind = VertexKind(obj["kind"])
    except ValueError:
        raise FormatError(f"unknown kind at {where}.kind: {obj['kind']!r}") from None
    code = obj["code"]
    signature = obj["signature"]
    ordinal = obj["ordinal"]
    line = obj["line"]
    if not isinstance(code, str):
        raise FormatError(f"{where}.code is not a string")
    if not isinstance(signature, str):
        raise FormatError(f"{where}.signature is not a string")
    if not isinstance(ordinal, int) or isinstance(ordinal, bool) or ordinal < 0:
        raise FormatError(f"{where}.ordinal is not a non-negative integer")
    if not isinstance(line, int) or isinstance(line, bool) or line < 1:
        raise FormatError(f"{where}.line is not a positive integer")
    return CpgVertex(
        key=make_key(kind, code, signature, ordinal),
        kind=kind,
        code=code,
        line=line,
        ordinal=ordinal,
        signature=signature,
    )


def _parse_edge(
    obj: Any, vertices: list[CpgVertex], where: str, extra: Optional[dict] = None
) -> CpgEdge:
    if not isinstance(obj, dict):
        raise FormatError(f"{where} is not an object")
    allowed = EDGE_FIELDS | (set(extra) if extra else set())
    _check_fields(obj, allowed, {"src_index", "dst_index", "etype"}, where)
    for field in ("src_index", "dst_index"):
        idx = obj[field]
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise FormatError(f"{where}.{field} is not an integer")
        if not 0 <= idx < len(vertices):
            raise GraphIntegrityError(
                f"{where}.{field} = {idx} references a missing vertex"
            )
    try:
        etype = EdgeType(obj["etype"])
    except ValueError:
        raise FormatError(f"unknown etype at {where}.etype: {obj['etype']!r}") from None
    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise FormatError(f"{where}.label is not a string or null")
    if extra is not None:
        for name, values in extra.items():
            if name not in obj:
                raise FormatError(f"missing field {where}.{name}")
            if obj[name] not in values:
                raise FormatError(f"bad value at {where}.{name}: {obj[name]!r}")
    return CpgEdge(vertices[obj["src_index"]].key, vertices[obj["dst_index"]].key, etype, label)


def graph_to_dict(graph: CpgGraph) -> dict:
    vertices = sorted(graph.vertices.values(), key=vertex_sort_key)
    index = {v.key: i for i, v in enumerate(vertices)}
    edges = sorted(
        graph.edges,
        key=lambda e: (index[e.src], index[e.dst], e.etype.value, e.label or ""),
    )
    return {
        "vertices": [
            {
                "kind": v.kind.value,
                "code": v.code,
                "signature": v.signature,
                "ordinal": v.ordinal,
                "line": v.line,
            }
            for v in vertices
        ],
        "edges": [
            {
                "src_index": index[e.src],
                "dst_index": index[e.dst],
                "etype": e.etype.value,
                "label": e.label,
            }
            for e in edges
        ],
    }


def graph_from_dict(doc: Any) -> CpgGraph:
    if not isinstance(doc, dict):
        raise FormatError("document is not an object")
    _check_fields(doc, {"vertices", "edges"}, {"vertices", "edges"}, "$")
    if not isinstance(doc["vertices"], list) or not isinstance(doc["edges"], list):
        raise FormatError("$.vertices and $.edges must be arrays")
    vertices = [
        _parse_vertex(obj, f"vertices[{i}]") for i, obj in enumerate(doc["vertices"])
    ]
    graph = CpgGraph()
    for i, v in enumerate(vertices):
        if v.key in graph.vertices:
            raise GraphIntegrityError(
                f"vertices[{i}] duplicates (kind, code, signature, ordinal)"
            )
        graph.vertices[v.key] = v
    for i, obj in enumerate(doc["edges"]):
        graph.edges.add(_parse_edge(obj, vertices, f"edges[{i}]"))
    graph.validate()
    return graph


def export_cpg(graph: CpgGraph, path: Union[str, Path]) -> None:
    Path(path).write_text(
        json.dumps(graph_to_dict(graph), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def import_cpg(path: Union[str, Path]) -> CpgGraph:
    """Read and fully re-validate a graph interchange file."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return graph_from_dict(doc)
