"""Core graph types for code property graphs.

A code property graph (CPG) merges the AST, control flow edges, and
program dependence edges of one program version into a single typed
graph. Vertex identity is carried by a content hash that excludes line
numbers, so two versions of a file can be compared by plain set algebra.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

from ..errors import DeltaCommitError


class VertexKind(Enum):
    CLASS = "CLASS"
    METHOD = "METHOD"
    PARAM = "PARAM"
    DECL = "DECL"
    ASSIGN = "ASSIGN"
    IF = "IF"
    WHILE = "WHILE"
    RETURN = "RETURN"
    CALL = "CALL"
    BINOP = "BINOP"
    IDENT = "IDENT"
    LITERAL = "LITERAL"
    FIELD_ACCESS = "FIELD_ACCESS"
    BLOCK = "BLOCK"
    CONDITION = "CONDITION"


#: Kinds whose ``code`` must be non-empty (they carry a source token).
LEAF_KINDS = frozenset({VertexKind.IDENT, VertexKind.LITERAL})

#: Kinds that occupy a slot in a statement list (CFG nodes).
STATEMENT_KINDS = frozenset(
    {
        VertexKind.DECL,
        VertexKind.ASSIGN,
        VertexKind.IF,
        VertexKind.WHILE,
        VertexKind.RETURN,
        VertexKind.CALL,
        VertexKind.BINOP,
        VertexKind.IDENT,
        VertexKind.LITERAL,
        VertexKind.FIELD_ACCESS,
    }
)


class EdgeType(Enum):
    AST = "AST"
    CFG = "CFG"
    PDG_DATA = "PDG_DATA"
    PDG_CTRL = "PDG_CTRL"


class GraphIntegrityError(DeltaCommitError):
    """A graph violates a structural invariant (dangling edge, dup key...)."""


@dataclass(frozen=True)
class VertexKey:
    """Stable identity of a vertex across versions and parse runs.

    The digest covers (kind, code, enclosing signature, ordinal) and
    nothing else; in particular source lines are excluded so whitespace
    edits do not churn keys.
    """

    digest: str

    def __repr__(self) -> str:  # keep assertion output short
        return f"VertexKey({self.digest[:12]})"


def make_key(kind: VertexKind, code: str, signature: str, ordinal: int) -> VertexKey:
    raw = "\x1f".join((kind.value, code, signature, str(ordinal)))
    return VertexKey(hashlib.sha256(raw.encode("utf-8")).hexdigest())


@dataclass(frozen=True)
class CpgVertex:
    key: VertexKey
    kind: VertexKind
    code: str
    line: int
    ordinal: int
    signature: str  # enclosing scope: "" for classes, class name for methods,
    #                 full method signature for everything inside a method

    def sort_token(self) -> tuple:
        """Deterministic total order used for linearization and export."""
        return (self.line, self.ordinal, self.kind.value, self.code, self.signature)


@dataclass(frozen=True)
class CpgEdge:
    src: VertexKey
    dst: VertexKey
    etype: EdgeType
    label: Optional[str] = None


def normalize_code(snippet: str) -> str:
    """Collapse whitespace runs to a single space; identifiers keep case."""
    return " ".join(snippet.split())


@dataclass
class CpgGraph:
    """One program version: vertex set keyed by identity plus typed edges.

    Graphs are treated as immutable once built; builders return fresh
    instances and never mutate their inputs.
    """

    vertices: dict[VertexKey, CpgVertex] = field(default_factory=dict)
    edges: set[CpgEdge] = field(default_factory=set)
    origin: Optional[str] = None  # source path, informational only

    def __eq__(self, other: object) -> bool:
        # origin is provenance, not content: round-tripped graphs compare equal
        if not isinstance(other, CpgGraph):
            return NotImplemented
        return self.vertices == other.vertices and self.edges == other.edges

    def edges_of_type(self, etype: EdgeType) -> set[CpgEdge]:
        return {e for e in self.edges if e.etype == etype}

    def validate(self) -> None:
        """Check every structural invariant; raise GraphIntegrityError."""
        keys = set(self.vertices)
        for k, v in self.vertices.items():
            if v.key != k:
                raise GraphIntegrityError(f"vertex stored under foreign key {k}")
            if v.kind in LEAF_KINDS and not v.code:
                raise GraphIntegrityError(f"empty code on leaf vertex {v.kind.value}")
            if v.ordinal < 0:
                raise GraphIntegrityError(f"negative ordinal on {v.kind.value} {v.code!r}")
        ast_parent: dict[VertexKey, VertexKey] = {}
        for e in self.edges:
            if e.src not in keys or e.dst not in keys:
                raise GraphIntegrityError(
                    f"dangling edge {e.etype.value} {e.src} -> {e.dst}"
                )
            if e.etype != EdgeType.AST and e.src == e.dst:
                raise GraphIntegrityError(f"self loop on {e.etype.value} edge")
            if e.etype == EdgeType.AST:
                if e.dst in ast_parent:
                    raise GraphIntegrityError("vertex with two AST parents")
                if e.src == e.dst:
                    raise GraphIntegrityError("self loop on AST edge")
                ast_parent[e.dst] = e.src
        # forest check: following parents must terminate
        for start in ast_parent:
            seen = set()
            cur: Optional[VertexKey] = start
            while cur is not None:
                if cur in seen:
                    raise GraphIntegrityError("cycle in AST edges")
                seen.add(cur)
                cur = ast_parent.get(cur)


@dataclass
class AstFragment(CpgGraph):
    """Parse result: a CpgGraph holding AST vertices/edges only, plus the
    ordered child lists the flat edge set cannot carry (edges are a set,
    so sibling order would otherwise be lost)."""

    children: dict[VertexKey, tuple[VertexKey, ...]] = field(default_factory=dict)
    roots: tuple[VertexKey, ...] = ()

    def child_vertices(self, key: VertexKey) -> list[CpgVertex]:
        return [self.vertices[c] for c in self.children.get(key, ())]


def assign_ordinals(
    rows: Iterable[tuple[VertexKind, str, str]],
) -> list[int]:
    """Ordinals in source order among vertices sharing (kind, code, signature).

    ``rows`` must be in source order; the returned list is parallel to it.
    """
    counts: dict[tuple[VertexKind, str, str], int] = {}
    out = []
    for row in rows:
        n = counts.get(row, 0)
        counts[row] = n + 1
        out.append(n)
    return out


def merged_graph(
    fragment: CpgGraph,
    extra_edges: Iterable[CpgEdge],
    origin: Optional[str] = None,
) -> CpgGraph:
    g = CpgGraph(
        vertices=dict(fragment.vertices),
        edges=set(fragment.edges) | set(extra_edges),
        origin=origin if origin is not None else fragment.origin,
    )
    g.validate()
    return g


def vertex_sort_key(v: CpgVertex) -> tuple:
    return v.sort_token() + (v.key.digest,)


def sorted_vertices(graph_or_mapping) -> list[CpgVertex]:
    vertices: Mapping[VertexKey, CpgVertex]
    vertices = graph_or_mapping.vertices if isinstance(graph_or_mapping, CpgGraph) else graph_or_mapping
    return sorted(vertices.values(), key=vertex_sort_key)
