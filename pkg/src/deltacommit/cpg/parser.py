"""Recursive-descent parser for a small Java-like language.

The accepted subset is: classes containing methods, method bodies made of
declarations, assignments, if/else, while, return, and expression
statements; expressions cover identifiers, integer and string literals,
binary operators, calls, and field accesses. Comments are skipped by the
tokenizer, so comment-only edits do not change the graph.

The parser emits an AstFragment: AST vertices and AST edges plus ordered
child lists. Vertex keys hash (kind, code, enclosing signature, ordinal)
and never the line number, so keys survive whitespace-only edits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from ..errors import DeltaCommitError
from .model import (
    AstFragment,
    CpgEdge,
    CpgVertex,
    EdgeType,
    VertexKind,
    assign_ordinals,
    make_key,
    normalize_code,
)


@dataclass(frozen=True)
class SourceUnit:
    path: str
    text: str
    language: str = "mini-java"


class MiniJavaSyntaxError(DeltaCommitError):
    def __init__(self, message: str, line: int, column: int, token: str) -> None:
        super().__init__(f"{message} at {line}:{column} near {token!r}")
        self.line = line
        self.column = column
        self.token = token


class EmptyUnit(DeltaCommitError):
    """The unit contains no class or method to parse."""


KEYWORDS = {"class", "if", "else", "while", "return"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|\||&&|==|!=|<=|>=|[{}(),;.=<>+\-*/%])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    type: str  # "ident", "int", "string", "op", "eof"
    value: str
    line: int
    column: int
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise MiniJavaSyntaxError("unexpected character", line, col, text[pos])
        kind = m.lastgroup
        value = m.group()
        if kind in ("ws", "comment"):
            nl = value.count("\n")
            if nl:
                line += nl
                line_start = m.start() + value.rfind("\n") + 1
        else:
            tokens.append(
                Token(kind, value, line, m.start() - line_start + 1, m.start(), m.end())
            )
        pos = m.end()
    tokens.append(Token("eof", "", line, n - line_start + 1, n, n))
    return tokens


@dataclass
class _Node:
    """Mutable parse-tree node, converted to immutable vertices afterwards."""

    kind: VertexKind
    code: str
    line: int
    children: list["_Node"] = field(default_factory=list)
    signature: str = ""


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers ----------------------------------------------------
    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.type != "eof":
            self.i += 1
        return tok

    def fail(self, message: str, tok: Optional[Token] = None) -> None:
        tok = tok or self.peek()
        raise MiniJavaSyntaxError(message, tok.line, tok.column, tok.value or "<eof>")

    def expect_op(self, op: str) -> Token:
        tok = self.peek()
        if tok.type != "op" or tok.value != op:
            self.fail(f"expected {op!r}")
        return self.next()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.type != "ident" or tok.value in KEYWORDS:
            self.fail("expected identifier")
        return self.next()

    def at_op(self, op: str) -> bool:
        tok = self.peek()
        return tok.type == "op" and tok.value == op

    def at_keyword(self, kw: str) -> bool:
        tok = self.peek()
        return tok.type == "ident" and tok.value == kw

    # -- grammar ----------------------------------------------------------
    def parse_program(self) -> list[_Node]:
        classes = []
        while self.peek().type != "eof":
            classes.append(self.parse_class())
        return classes

    def parse_class(self) -> _Node:
        tok = self.peek()
        if not self.at_keyword("class"):
            self.fail("expected 'class'")
        self.next()
        name = self.expect_ident()
        node = _Node(VertexKind.CLASS, name.value, tok.line)
        self.expect_op("{")
        while not self.at_op("}"):
            if self.peek().type == "eof":
                self.fail("unterminated class body")
            node.children.append(self.parse_method())
        self.expect_op("}")
        return node

    def parse_method(self) -> _Node:
        self.expect_ident()  # return type, not modelled as a vertex
        name = self.expect_ident()
        node = _Node(VertexKind.METHOD, name.value, name.line)
        self.expect_op("(")
        param_types = []
        if not self.at_op(")"):
            while True:
                ptype = self.expect_ident()
                pname = self.expect_ident()
                param_types.append(ptype.value)
                node.children.append(_Node(VertexKind.PARAM, pname.value, pname.line))
                if self.at_op(","):
                    self.next()
                    continue
                break
        self.expect_op(")")
        node.children.append(self.parse_block())
        # full signature stored on the node; the scope pass pushes it down
        node.signature = f"{name.value}({','.join(param_types)})"
        return node

    def parse_block(self) -> _Node:
        brace = self.expect_op("{")
        node = _Node(VertexKind.BLOCK, "", brace.line)
        while not self.at_op("}"):
            if self.peek().type == "eof":
                self.fail("unterminated block")
            node.children.append(self.parse_statement())
        self.expect_op("}")
        return node

    def parse_statement(self) -> _Node:
        if self.at_keyword("if"):
            return self.parse_if()
        if self.at_keyword("while"):
            return self.parse_while()
        if self.at_keyword("return"):
            tok = self.next()
            node = _Node(VertexKind.RETURN, "return", tok.line)
            if not self.at_op(";"):
                node.children.append(self.parse_expr())
            self.expect_op(";")
            return node
        if self.peek().type == "ident" and self.peek().value not in KEYWORDS:
            nxt = self.peek(1)
            if nxt.type == "ident" and nxt.value not in KEYWORDS:
                return self.parse_declaration()
            if nxt.type == "op" and nxt.value == "=":
                return self.parse_assignment()
        expr = self.parse_expr()
        self.expect_op(";")
        return expr

    def parse_declaration(self) -> _Node:
        self.expect_ident()  # declared type, kept out of the graph
        name = self.expect_ident()
        node = _Node(VertexKind.DECL, name.value, name.line)
        if self.at_op("="):
            eq = self.next()
            assign = _Node(VertexKind.ASSIGN, name.value, eq.line)
            assign.children.append(self.parse_expr())
            node.children.append(assign)
        self.expect_op(";")
        return node

    def parse_assignment(self) -> _Node:
        name = self.expect_ident()
        self.expect_op("=")
        node = _Node(VertexKind.ASSIGN, name.value, name.line)
        node.children.append(self.parse_expr())
        self.expect_op(";")
        return node

    def parse_if(self) -> _Node:
        tok = self.next()
        node = _Node(VertexKind.IF, "if", tok.line)
        node.children.append(self.parse_condition())
        node.children.append(self.parse_branch())
        if self.at_keyword("else"):
            self.next()
            node.children.append(self.parse_branch())
        return node

    def parse_while(self) -> _Node:
        tok = self.next()
        node = _Node(VertexKind.WHILE, "while", tok.line)
        node.children.append(self.parse_condition())
        node.children.append(self.parse_branch())
        return node

    def parse_condition(self) -> _Node:
        lparen = self.expect_op("(")
        expr = self.parse_expr()
        rparen = self.expect_op(")")
        snippet = normalize_code(self.text[lparen.end : rparen.start])
        node = _Node(VertexKind.CONDITION, snippet, lparen.line)
        node.children.append(expr)
        return node

    def parse_branch(self) -> _Node:
        if self.at_op("{"):
            return self.parse_block()
        return self.parse_statement()

    # expressions, lowest to highest precedence
    _BINOP_LEVELS = (("||",), ("&&",), ("==", "!="), ("<", ">", "<=", ">="),
                     ("+", "-"), ("*", "/", "%"))

    def parse_expr(self, level: int = 0) -> _Node:
        if level == len(self._BINOP_LEVELS):
            return self.parse_postfix()
        node = self.parse_expr(level + 1)
        ops = self._BINOP_LEVELS[level]
        while self.peek().type == "op" and self.peek().value in ops:
            tok = self.next()
            rhs = self.parse_expr(level + 1)
            parent = _Node(VertexKind.BINOP, tok.value, tok.line)
            parent.children = [node, rhs]
            node = parent
        return node

    def parse_postfix(self) -> _Node:
        node = self.parse_primary()
        while True:
            if self.at_op("."):
                self.next()
                member = self.expect_ident()
                if self.at_op("("):
                    call = _Node(VertexKind.CALL, member.value, member.line)
                    call.children.append(node)
                    call.children.extend(self.parse_args())
                    node = call
                else:
                    access = _Node(VertexKind.FIELD_ACCESS, member.value, member.line)
                    access.children.append(node)
                    node = access
            elif self.at_op("(") and node.kind == VertexKind.IDENT and not node.children:
                call = _Node(VertexKind.CALL, node.code, node.line)
                call.children.extend(self.parse_args())
                node = call
            else:
                return node

    def parse_args(self) -> list[_Node]:
        self.expect_op("(")
        args = []
        if not self.at_op(")"):
            while True:
                args.append(self.parse_expr())
                if self.at_op(","):
                    self.next()
                    continue
                break
        self.expect_op(")")
        return args

    def parse_primary(self) -> _Node:
        tok = self.peek()
        if tok.type == "ident" and tok.value not in KEYWORDS:
            self.next()
            return _Node(VertexKind.IDENT, tok.value, tok.line)
        if tok.type == "int":
            self.next()
            return _Node(VertexKind.LITERAL, tok.value, tok.line)
        if tok.type == "string":
            self.next()
            return _Node(VertexKind.LITERAL, tok.value, tok.line)
        if tok.type == "op" and tok.value == "(":
            self.next()
            expr = self.parse_expr()
            self.expect_op(")")
            return expr
        self.fail("expected expression")
        raise AssertionError("unreachable")


def _push_scopes(classes: list[_Node]) -> None:
    """Fill the signature field: "" for classes, the class name for methods,
    and the full method signature for everything inside a method body."""

    def mark(node: _Node, scope: str) -> None:
        node.signature = scope
        for child in node.children:
            mark(child, scope)

    for cls in classes:
        cls.signature = ""
        for method in cls.children:
            full = f"{cls.code}.{method.signature}"
            method.signature = cls.code
            for child in method.children:
                mark(child, full)


def parse_source(unit: SourceUnit) -> AstFragment:
    """Parse one source unit into an AST-only graph fragment.

    Deterministic for identical input text. Raises MiniJavaSyntaxError with
    position info for malformed input, EmptyUnit for text with no class.
    """
    if unit.language != "mini-java":
        raise DeltaCommitError(f"unsupported language {unit.language!r}")
    parser = _Parser(unit.text)
    if parser.peek().type == "eof":
        raise EmptyUnit(f"no class or method in {unit.path or '<unit>'}")
    classes = parser.parse_program()
    if not classes:
        raise EmptyUnit(f"no class or method in {unit.path or '<unit>'}")
    _push_scopes(classes)

    # source-order (pre-order) walk: ordinals disambiguate equal
    # (kind, code, signature) rows, which makes every key unique
    order: list[_Node] = []
    parent_index: list[int] = []

    def walk(node: _Node, parent: int) -> None:
        idx = len(order)
        order.append(node)
        parent_index.append(parent)
        for child in node.children:
            walk(child, idx)

    for cls in classes:
        walk(cls, -1)

    ordinals = assign_ordinals((n.kind, n.code, n.signature) for n in order)
    vertices = [
        CpgVertex(
            key=make_key(n.kind, n.code, n.signature, o),
            kind=n.kind,
            code=n.code,
            line=n.line,
            ordinal=o,
            signature=n.signature,
        )
        for n, o in zip(order, ordinals)
    ]

    fragment = AstFragment(origin=unit.path)
    children: dict = {v.key: [] for v in vertices}
    roots = []
    for idx, v in enumerate(vertices):
        fragment.vertices[v.key] = v
        p = parent_index[idx]
        if p < 0:
            roots.append(v.key)
        else:
            parent_key = vertices[p].key
            fragment.edges.add(CpgEdge(parent_key, v.key, EdgeType.AST))
            children[parent_key].append(v.key)
    fragment.children = {k: tuple(v) for k, v in children.items()}
    fragment.roots = tuple(roots)
    fragment.validate()
    return fragment
