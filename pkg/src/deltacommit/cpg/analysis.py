"""Control-flow and dependence analysis over parsed fragments.

CFG edges connect statement vertices inside one method. Branch vertices
always carry two labeled out-edges ("true"/"false"); when a branch has no
following statement the method vertex stands in as the join target, which
keeps the out-degree contract without inventing synthetic exit nodes.

PDG_DATA edges run def -> use for every reaching definition, computed by
a forward gen/kill fixpoint over the CFG. PDG_CTRL edges run from each
condition vertex to the statements it directly guards.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .model import (
    AstFragment,
    CpgEdge,
    CpgGraph,
    EdgeType,
    VertexKey,
    VertexKind,
    merged_graph,
)
from .parser import SourceUnit, parse_source

CFG_TRUE = "true"
CFG_FALSE = "false"


def _methods(fragment: AstFragment) -> list[VertexKey]:
    out = []
    for root in fragment.roots:
        for child in fragment.children.get(root, ()):
            if fragment.vertices[child].kind == VertexKind.METHOD:
                out.append(child)
    return out


def _method_parts(
    fragment: AstFragment, method: VertexKey
) -> tuple[list[VertexKey], Optional[VertexKey]]:
    """(param keys, body block key) of a method."""
    params = []
    body = None
    for child in fragment.children.get(method, ()):
        if fragment.vertices[child].kind == VertexKind.PARAM:
            params.append(child)
        elif fragment.vertices[child].kind == VertexKind.BLOCK:
            body = child
    return params, body


def _branches(fragment: AstFragment, stmt: VertexKey) -> list[VertexKey]:
    """Branch children of an IF (then, else?) or WHILE (body) vertex.

    Each entry is either a BLOCK or a single bare statement.
    """
    kids = fragment.children.get(stmt, ())
    return [k for k in kids if fragment.vertices[k].kind != VertexKind.CONDITION]


def _branch_stmts(fragment: AstFragment, branch: VertexKey) -> list[VertexKey]:
    if fragment.vertices[branch].kind == VertexKind.BLOCK:
        return list(fragment.children.get(branch, ()))
    return [branch]


def _condition(fragment: AstFragment, stmt: VertexKey) -> VertexKey:
    for k in fragment.children.get(stmt, ()):
        if fragment.vertices[k].kind == VertexKind.CONDITION:
            return k
    raise AssertionError("branch statement without condition child")


def build_cfg(fragment: AstFragment) -> set[CpgEdge]:
    """Intra-method control successor edges for a parsed fragment."""
    edges: set[CpgEdge] = set()

    def entry(stmts: list[VertexKey], fallback: VertexKey) -> VertexKey:
        return stmts[0] if stmts else fallback

    def wire_list(
        stmts: list[VertexKey], continuation: Optional[VertexKey], method: VertexKey
    ) -> None:
        for i, s in enumerate(stmts):
            nxt = stmts[i + 1] if i + 1 < len(stmts) else continuation
            wire_stmt(s, nxt, method)

    def wire_stmt(
        stmt: VertexKey, nxt: Optional[VertexKey], method: VertexKey
    ) -> None:
        kind = fragment.vertices[stmt].kind
        if kind == VertexKind.RETURN:
            return
        if kind == VertexKind.IF:
            join = nxt if nxt is not None else method
            branches = _branches(fragment, stmt)
            then_stmts = _branch_stmts(fragment, branches[0])
            edges.add(CpgEdge(stmt, entry(then_stmts, join), EdgeType.CFG, CFG_TRUE))
            wire_list(then_stmts, nxt, method)
            if len(branches) > 1:
                else_stmts = _branch_stmts(fragment, branches[1])
                edges.add(
                    CpgEdge(stmt, entry(else_stmts, join), EdgeType.CFG, CFG_FALSE)
                )
                wire_list(else_stmts, nxt, method)
            else:
                edges.add(CpgEdge(stmt, join, EdgeType.CFG, CFG_FALSE))
            return
        if kind == VertexKind.WHILE:
            join = nxt if nxt is not None else method
            body_stmts = _branch_stmts(fragment, _branches(fragment, stmt)[0])
            edges.add(CpgEdge(stmt, entry(body_stmts, join), EdgeType.CFG, CFG_TRUE))
            edges.add(CpgEdge(stmt, join, EdgeType.CFG, CFG_FALSE))
            wire_list(body_stmts, stmt, method)  # loop back to the test
            return
        # straight-line statement: link to a real successor only
        if nxt is not None:
            edges.add(CpgEdge(stmt, nxt, EdgeType.CFG))

    for method in _methods(fragment):
        _, body = _method_parts(fragment, method)
        if body is not None:
            wire_list(list(fragment.children.get(body, ())), None, method)
    return edges


def _ident_leaves(fragment: AstFragment, root: VertexKey) -> list[str]:
    out = []
    stack = [root]
    while stack:
        k = stack.pop()
        v = fragment.vertices[k]
        if v.kind == VertexKind.IDENT:
            out.append(v.code)
        stack.extend(reversed(fragment.children.get(k, ())))
    return out


def _method_statements(fragment: AstFragment, method: VertexKey) -> list[VertexKey]:
    _, body = _method_parts(fragment, method)
    if body is None:
        return []
    out: list[VertexKey] = []

    def visit(stmts: Iterable[VertexKey]) -> None:
        for s in stmts:
            out.append(s)
            kind = fragment.vertices[s].kind
            if kind in (VertexKind.IF, VertexKind.WHILE):
                for branch in _branches(fragment, s):
                    visit(_branch_stmts(fragment, branch))

    visit(fragment.children.get(body, ()))
    return out


def _defs(fragment: AstFragment, stmt: VertexKey) -> Optional[str]:
    """Variable defined by a statement, or None."""
    v = fragment.vertices[stmt]
    if v.kind == VertexKind.ASSIGN:
        return v.code
    if v.kind == VertexKind.DECL and fragment.children.get(stmt):
        return v.code  # declaration with initializer
    return None


def _use_sites(fragment: AstFragment, stmt: VertexKey) -> list[tuple[VertexKey, str]]:
    """(attachment vertex, variable) pairs read by a statement.

    Condition reads attach to the CONDITION vertex; everything else
    attaches to the statement vertex itself.
    """
    v = fragment.vertices[stmt]
    if v.kind in (VertexKind.IF, VertexKind.WHILE):
        cond = _condition(fragment, stmt)
        return [(cond, name) for name in _ident_leaves(fragment, cond)]
    return [(stmt, name) for name in _ident_leaves(fragment, stmt)]


def build_pdg(fragment: AstFragment, cfg: set[CpgEdge]) -> set[CpgEdge]:
    """Data and control dependence edges for a parsed fragment.

    Reaching definitions are a may-analysis: a def reaches a use if some
    def-clear CFG path connects them. Self-dependences (a statement whose
    def reaches its own use around a loop) are dropped because edges may
    not be self-loops.
    """
    edges: set[CpgEdge] = set()
    preds: dict[VertexKey, set[VertexKey]] = {}
    for e in cfg:
        preds.setdefault(e.dst, set()).add(e.src)

    for method in _methods(fragment):
        params, body = _method_parts(fragment, method)
        stmts = _method_statements(fragment, method)
        if not stmts:
            continue
        entry_defs = frozenset(
            (p, fragment.vertices[p].code) for p in params
        )
        first = fragment.children[body][0] if fragment.children.get(body) else None
        stmt_set = set(stmts)

        gen: dict[VertexKey, frozenset] = {}
        kill_var: dict[VertexKey, Optional[str]] = {}
        defs_by_var: dict[str, set[tuple[VertexKey, str]]] = {}
        for p, name in entry_defs:
            defs_by_var.setdefault(name, set()).add((p, name))
        for s in stmts:
            var = _defs(fragment, s)
            kill_var[s] = var
            gen[s] = frozenset({(s, var)}) if var else frozenset()
            if var:
                defs_by_var.setdefault(var, set()).add((s, var))

        in_sets: dict[VertexKey, set] = {s: set() for s in stmts}
        out_sets: dict[VertexKey, set] = {s: set() for s in stmts}
        work = list(stmts)
        while work:
            s = work.pop(0)
            new_in = set(entry_defs) if s == first else set()
            for p in preds.get(s, ()):
                if p in stmt_set:
                    new_in |= out_sets[p]
            var = kill_var[s]
            killed = defs_by_var.get(var, set()) if var else set()
            new_out = set(gen[s]) | (new_in - killed)
            if new_in != in_sets[s] or new_out != out_sets[s]:
                in_sets[s] = new_in
                out_sets[s] = new_out
                for e in cfg:
                    if e.src == s and e.dst in stmt_set and e.dst not in work:
                        work.append(e.dst)

        ctrl_sources: dict[VertexKey, VertexKey] = {}
        for s in stmts:
            v = fragment.vertices[s]
            if v.kind in (VertexKind.IF, VertexKind.WHILE):
                cond = _condition(fragment, s)
                for branch in _branches(fragment, s):
                    for guarded in _branch_stmts(fragment, branch):
                        edges.add(CpgEdge(cond, guarded, EdgeType.PDG_CTRL))
                ctrl_sources[s] = cond
            for site, var in _use_sites(fragment, s):
                for def_key, def_var in in_sets[s]:
                    if def_var == var and def_key != site:
                        edges.add(CpgEdge(def_key, site, EdgeType.PDG_DATA, var))
    return edges


def build_cpg(unit: SourceUnit) -> CpgGraph:
    """Parse a unit and merge AST, CFG, and PDG edges over one vertex set.

    Deterministic and idempotent; parse errors propagate unchanged.
    """
    fragment = parse_source(unit)
    cfg = build_cfg(fragment)
    pdg = build_pdg(fragment, cfg)
    return merged_graph(fragment, cfg | pdg, origin=unit.path)


def empty_graph(origin: Optional[str] = None) -> CpgGraph:
    """The CPG of a missing program version (added or deleted files)."""
    return CpgGraph(origin=origin)
