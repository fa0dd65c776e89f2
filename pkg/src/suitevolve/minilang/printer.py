"""Canonical pretty-printer. ``parse(print(p))`` is structurally equal to ``p``."""

from __future__ import annotations

from .nodes import (
    Assign, Binary, BoolLit, Call, ExprStmt, FunctionDecl, If, IntLit, Let,
    Return, StrLit, Unary, Var, While,
)

INDENT = "    "

_PREC = {
    "||": 1, "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}
_UNARY_PREC = 7
_ATOM_PREC = 8


def _prec(e) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _UNARY_PREC
    if isinstance(e, IntLit) and e.value < 0:
        return _UNARY_PREC
    return _ATOM_PREC


def _quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    return '"' + out.replace("\n", "\\n").replace("\t", "\\t") + '"'


def format_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, StrLit):
        return _quote(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Unary):
        inner = format_expr(e.operand)
        if _prec(e.operand) < _UNARY_PREC:
            inner = f"({inner})"
        elif e.op == "-" and inner.startswith("-"):
            inner = f"({inner})"
        return e.op + inner
    if isinstance(e, Binary):
        p = _PREC[e.op]
        left = format_expr(e.left)
        if _prec(e.left) < p:
            left = f"({left})"
        right = format_expr(e.right)
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")


def _block(stmts, depth, out):
    for s in stmts:
        _stmt(s, depth, out)


def _stmt(s, depth, out):
    pad = INDENT * depth
    if isinstance(s, Let):
        out.append(f"{pad}let {s.name} = {format_expr(s.value)};")
    elif isinstance(s, Assign):
        out.append(f"{pad}{s.name} = {format_expr(s.value)};")
    elif isinstance(s, Return):
        if s.value is None:
            out.append(f"{pad}return;")
        else:
            out.append(f"{pad}return {format_expr(s.value)};")
    elif isinstance(s, ExprStmt):
        out.append(f"{pad}{format_expr(s.expr)};")
    elif isinstance(s, While):
        out.append(f"{pad}while ({format_expr(s.cond)}) {{")
        _block(s.body, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, If):
        _if(s, depth, out, pad)
    else:
        raise TypeError(f"not a statement: {s!r}")


def _if(s, depth, out, head):
    pad = INDENT * depth
    out.append(f"{head}if ({format_expr(s.cond)}) {{")
    _block(s.then, depth + 1, out)
    if s.orelse is None:
        out.append(f"{pad}}}")
    elif len(s.orelse) == 1 and isinstance(s.orelse[0], If):
        _if(s.orelse[0], depth, out, f"{pad}}} else ")
    else:
        out.append(f"{pad}}} else {{")
        _block(s.orelse, depth + 1, out)
        out.append(f"{pad}}}")


def format_stmt(s, depth: int = 0) -> str:
    out = []
    _stmt(s, depth, out)
    return "\n".join(out)


def format_block(stmts, depth: int = 0) -> str:
    out = []
    _block(stmts, depth, out)
    return "\n".join(out)


def format_function(f: FunctionDecl) -> str:
    kw = "test" if f.is_test else "fn"
    lines = [f"{kw} {f.name}({', '.join(f.params)}) {{"]
    _block(f.body, 1, lines)
    lines.append("}")
    return "\n".join(lines)


def format_unit(functions) -> str:
    """Print a sequence of declarations as a source file."""
    if not functions:
        return ""
    return "\n\n".join(format_function(f) for f in functions) + "\n"
