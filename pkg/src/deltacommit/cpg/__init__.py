"""Code property graphs: parsing, flow analysis, and interchange."""

from .analysis import build_cfg, build_cpg, build_pdg, empty_graph
from .interchange import (
    FormatError,
    export_cpg,
    graph_from_dict,
    graph_to_dict,
    import_cpg,
)
from .model import (
    AstFragment,
    CpgEdge,
    CpgGraph,
    CpgVertex,
    EdgeType,
    GraphIntegrityError,
    VertexKey,
    VertexKind,
    make_key,
    normalize_code,
)
from .parser import EmptyUnit, MiniJavaSyntaxError, SourceUnit, parse_source

__all__ = [
    "AstFragment",
    "CpgEdge",
    "CpgGraph",
    "CpgVertex",
    "EdgeType",
    "EmptyUnit",
    "FormatError",
    "GraphIntegrityError",
    "MiniJavaSyntaxError",
    "SourceUnit",
    "VertexKey",
    "VertexKind",
    "build_cfg",
    "build_cpg",
    "build_pdg",
    "empty_graph",
    "export_cpg",
    "graph_from_dict",
    "graph_to_dict",
    "import_cpg",
    "make_key",
    "normalize_code",
    "parse_source",
]
