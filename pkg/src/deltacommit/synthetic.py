"""Random mini-language programs, edits, and commit corpora.

Everything here is seeded and deterministic: property tests draw program
pairs from it, the bundled demo corpus is rendered by it, and demo
scripts use it to build inputs without shipping real repository data.
"""

from __future__ import annotations

import difflib
import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

VAR_POOL = ("x", "y", "z", "count", "total", "size", "limit", "value")
CALL_POOL = ("log", "update", "notify", "reset", "process", "validate")
OPS = ("+", "-", "*", ">", "<", ">=", "<=", "==", "!=")
COMPARE_OPS = (">", "<", ">=", "<=", "==", "!=")


# -- expression / statement specs -------------------------------------------
#
# expressions: ("lit", n) ("var", v) ("bin", op, a, b) ("call", name, [args])
# statements:  ("decl", v, expr|None) ("assign", v, expr) ("ret", expr|None)
#              ("callstmt", name, [args]) ("if", expr, [then], [else])
#              ("while", expr, [body])


def render_expr(e) -> str:
    tag = e[0]
    if tag == "lit":
        return str(e[1])
    if tag == "var":
        return e[1]
    if tag == "bin":
        return f"{render_expr(e[2])} {e[1]} {render_expr(e[3])}"
    if tag == "call":
        return f"{e[1]}({', '.join(render_expr(a) for a in e[2])})"
    raise ValueError(f"unknown expr {e!r}")


def render_stmt(s, indent: int) -> list[str]:
    pad = "    " * indent
    tag = s[0]
    if tag == "decl":
        if s[2] is None:
            return [f"{pad}int {s[1]};"]
        return [f"{pad}int {s[1]} = {render_expr(s[2])};"]
    if tag == "assign":
        return [f"{pad}{s[1]} = {render_expr(s[2])};"]
    if tag == "ret":
        return [f"{pad}return;"] if s[1] is None else [f"{pad}return {render_expr(s[1])};"]
    if tag == "callstmt":
        return [f"{pad}{s[1]}({', '.join(render_expr(a) for a in s[2])});"]
    if tag == "if":
        lines = [f"{pad}if ({render_expr(s[1])}) {{"]
        for inner in s[2]:
            lines.extend(render_stmt(inner, indent + 1))
        if s[3]:
            lines.append(f"{pad}}} else {{")
            for inner in s[3]:
                lines.extend(render_stmt(inner, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    if tag == "while":
        lines = [f"{pad}while ({render_expr(s[1])}) {{"]
        for inner in s[2]:
            lines.extend(render_stmt(inner, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    raise ValueError(f"unknown stmt {s!r}")


def render_program(stmts, class_name: str = "A", method_name: str = "run",
                   params: tuple[str, ...] = ("a", "b")) -> str:
    lines = [f"class {class_name} {{"]
    plist = ", ".join(f"int {p}" for p in params)
    lines.append(f"    int {method_name}({plist}) {{")
    for s in stmts:
        lines.extend(render_stmt(s, 2))
    lines.append("    }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def count_statements(stmts) -> int:
    total = 0
    for s in stmts:
        total += 1
        if s[0] == "if":
            total += count_statements(s[2]) + count_statements(s[3])
        elif s[0] == "while":
            total += count_statements(s[2])
    return total


def gen_expr(rng: random.Random, vars_in_scope: list[str], depth: int = 0):
    roll = rng.random()
    if depth >= 2 or roll < 0.35 or not vars_in_scope:
        if rng.random() < 0.5 and vars_in_scope:
            return ("var", rng.choice(vars_in_scope))
        return ("lit", rng.randrange(0, 10))
    if roll < 0.85:
        return (
            "bin",
            rng.choice(OPS),
            gen_expr(rng, vars_in_scope, depth + 1),
            gen_expr(rng, vars_in_scope, depth + 1),
        )
    args = [gen_expr(rng, vars_in_scope, depth + 1) for _ in range(rng.randrange(0, 3))]
    return ("call", rng.choice(CALL_POOL), args)


def gen_condition(rng: random.Random, vars_in_scope: list[str]):
    lhs = ("var", rng.choice(vars_in_scope)) if vars_in_scope else ("lit", rng.randrange(10))
    return ("bin", rng.choice(COMPARE_OPS), lhs, ("lit", rng.randrange(0, 10)))


def gen_statements(rng: random.Random, budget: int, vars_in_scope: list[str],
                   allow_nesting: bool = True) -> list:
    """Statement list consuming exactly ``budget`` statement slots."""
    stmts = []
    while budget > 0:
        roll = rng.random()
        if allow_nesting and budget >= 2 and roll < 0.22:
            inner_budget = rng.randrange(1, budget)
            cond = gen_condition(rng, vars_in_scope)
            if rng.random() < 0.6:
                then_n = rng.randrange(1, inner_budget + 1)
                else_n = inner_budget - then_n
                then = gen_statements(rng, then_n, list(vars_in_scope), allow_nesting=False)
                other = gen_statements(rng, else_n, list(vars_in_scope), allow_nesting=False)
                stmts.append(("if", cond, then, other))
            else:
                body = gen_statements(rng, inner_budget, list(vars_in_scope), allow_nesting=False)
                stmts.append(("while", cond, body))
            budget -= 1 + inner_budget
        elif roll < 0.45:
            fresh = [v for v in VAR_POOL if v not in vars_in_scope]
            if fresh:
                v = rng.choice(fresh)
                stmts.append(("decl", v, gen_expr(rng, vars_in_scope)))
                vars_in_scope.append(v)
            else:
                v = rng.choice(vars_in_scope)
                stmts.append(("assign", v, gen_expr(rng, vars_in_scope)))
            budget -= 1
        elif roll < 0.75 and vars_in_scope:
            v = rng.choice(vars_in_scope)
            stmts.append(("assign", v, gen_expr(rng, vars_in_scope)))
            budget -= 1
        elif roll < 0.9:
            args = [gen_expr(rng, vars_in_scope) for _ in range(rng.randrange(0, 3))]
            stmts.append(("callstmt", rng.choice(CALL_POOL), args))
            budget -= 1
        else:
            stmts.append(("ret", gen_expr(rng, vars_in_scope) if rng.random() < 0.7 else None))
            budget -= 1
    return stmts


def gen_program_text(seed: int, n_statements: Optional[int] = None) -> str:
    rng = random.Random(seed)
    n = n_statements if n_statements is not None else rng.randrange(1, 9)
    stmts = gen_statements(rng, n, ["a", "b"])
    return render_program(stmts)


# -- edits -------------------------------------------------------------------

EDIT_KINDS = ("op_swap", "lit_bump", "insert", "delete", "rename", "none")


def _walk_exprs(stmts):
    """Yield (container, index) pairs addressing every expression slot."""
    for s in stmts:
        if s[0] in ("decl", "ret") and s[1 if s[0] == "ret" else 2] is not None:
            pass
        if s[0] == "decl" and s[2] is not None:
            yield from _expr_nodes(s[2])
        elif s[0] == "assign":
            yield from _expr_nodes(s[2])
        elif s[0] == "ret" and s[1] is not None:
            yield from _expr_nodes(s[1])
        elif s[0] == "callstmt":
            for a in s[2]:
                yield from _expr_nodes(a)
        elif s[0] == "if":
            yield from _expr_nodes(s[1])
            yield from _walk_exprs(s[2])
            yield from _walk_exprs(s[3])
        elif s[0] == "while":
            yield from _expr_nodes(s[1])
            yield from _walk_exprs(s[2])


def _expr_nodes(e):
    yield e
    if e[0] == "bin":
        yield from _expr_nodes(e[2])
        yield from _expr_nodes(e[3])
    elif e[0] == "call":
        for a in e[1 + 1]:
            yield from _expr_nodes(a)


def _replace_expr(stmts, old, new):
    def rep(e):
        if e is old:
            return new
        if e[0] == "bin":
            return ("bin", e[1], rep(e[2]), rep(e[3]))
        if e[0] == "call":
            return ("call", e[1], [rep(a) for a in e[2]])
        return e

    out = []
    for s in stmts:
        if s[0] == "decl":
            out.append(("decl", s[1], rep(s[2]) if s[2] is not None else None))
        elif s[0] == "assign":
            out.append(("assign", s[1], rep(s[2])))
        elif s[0] == "ret":
            out.append(("ret", rep(s[1]) if s[1] is not None else None))
        elif s[0] == "callstmt":
            out.append(("callstmt", s[1], [rep(a) for a in s[2]]))
        elif s[0] == "if":
            out.append(("if", rep(s[1]), _replace_expr(s[2], old, new), _replace_expr(s[3], old, new)))
        elif s[0] == "while":
            out.append(("while", rep(s[1]), _replace_expr(s[2], old, new)))
        else:
            out.append(s)
    return out


@dataclass(frozen=True)
class EditedPair:
    old_text: str
    new_text: str
    edit_kind: str
    message: str


def gen_edited_pair(seed: int, n_statements: Optional[int] = None) -> EditedPair:
    """A program plus an edited version of it, with a plausible message."""
    rng = random.Random(seed)
    n = n_statements if n_statements is not None else rng.randrange(2, 9)
    stmts = gen_statements(rng, n, ["a", "b"])
    kind = rng.choice(EDIT_KINDS[:-1])  # "none" only by explicit request
    new_stmts = list(stmts)
    message = "update run logic"

    if kind == "op_swap":
        bins = [e for e in _walk_exprs(stmts) if e[0] == "bin"]
        if bins:
            target = rng.choice(bins)
            new_op = rng.choice([o for o in OPS if o != target[1]])
            new_stmts = _replace_expr(stmts, target, ("bin", new_op, target[2], target[3]))
            message = f"fix operator in run: use {new_op}"
        else:
            kind = "insert"
    if kind == "lit_bump":
        lits = [e for e in _walk_exprs(stmts) if e[0] == "lit"]
        if lits:
            target = rng.choice(lits)
            new_stmts = _replace_expr(stmts, target, ("lit", target[1] + 1))
            message = "adjust constant in run"
        else:
            kind = "insert"
    if kind == "insert":
        extra = gen_statements(rng, 1, ["a", "b"], allow_nesting=False)
        pos = rng.randrange(0, len(stmts) + 1)
        new_stmts = stmts[:pos] + extra + stmts[pos:]
        message = "add statement to run"
    elif kind == "delete" and len(stmts) > 1:
        pos = rng.randrange(0, len(stmts))
        new_stmts = stmts[:pos] + stmts[pos + 1 :]
        message = "remove statement from run"
    elif kind == "rename":
        decls = [s[1] for s in stmts if s[0] == "decl"]
        if decls:
            old_name = rng.choice(decls)
            new_name = old_name + "v2"
            text = render_program(stmts)
            return EditedPair(
                old_text=text,
                new_text=text.replace(old_name, new_name),
                edit_kind="rename",
                message=f"rename {old_name} to {new_name}",
            )
        new_stmts = stmts + gen_statements(rng, 1, ["a", "b"], allow_nesting=False)
        message = "add statement to run"
        kind = "insert"

    return EditedPair(
        old_text=render_program(stmts),
        new_text=render_program(new_stmts),
        edit_kind=kind,
        message=message,
    )


# -- corpus rendering ----------------------------------------------------------


def unified_diff(old: str, new: str, path: str) -> str:
    return "".join(
        difflib.unified_diff(
            old.splitlines(keepends=True),
            new.splitlines(keepends=True),
            fromfile=f"a/{path}",
            tofile=f"b/{path}",
        )
    )


def fake_sha(*parts: str) -> str:
    return hashlib.sha1("\x1f".join(parts).encode("utf-8")).hexdigest()


def gen_corpus_records(seed: int, n_records: int, repo: str = "demo/alpha") -> list[dict]:
    out = []
    for i in range(n_records):
        pair = gen_edited_pair(seed * 1000 + i)
        path = f"src/Main{i % 7}.java"
        out.append(
            {
                "repo": repo,
                "sha": fake_sha(repo, str(seed), str(i)),
                "path": path,
                "message_raw": pair.message + "\n\nsynthetic edit: " + pair.edit_kind,
                "old_text": pair.old_text,
                "new_text": pair.new_text,
                "diff_text": unified_diff(pair.old_text, pair.new_text, path),
            }
        )
    return out


def write_corpus(records: list[dict], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
