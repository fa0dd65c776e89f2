"""Lower AST declarations into the flat tuple code the kernels execute.

Expression tuples (first element is the opcode)::

    (E_CONST, value)
    (E_VAR, name, line, col)
    (E_BIN, binop, left, right, line, col)
    (E_AND | E_OR, left, right, line, col)
    (E_NOT | E_NEG, operand, line, col)
    (E_CALL, name, args, line, col)
    (E_BUILTIN, builtin, args, line, col)

Statement tuples::

    (S_LET | S_ASSIGN, sid, line, col, name, expr)
    (S_IF, sid, line, col, cond, then, orelse, bid)
    (S_WHILE, sid, line, col, cond, body, bid)
    (S_RETURN, sid, line, col, expr_or_None)
    (S_EXPR, sid, line, col, expr)

A function table maps name -> ``(params, body, name, file)``.
"""

from __future__ import annotations

from .nodes import (
    Assign, Binary, BoolLit, Call, ExprStmt, If, IntLit, Let, Return, StrLit,
    Unary, Var, While,
)
from .parser import BUILTINS

E_CONST, E_VAR, E_BIN, E_AND, E_OR, E_NOT, E_NEG, E_CALL, E_BUILTIN = range(9)
S_LET, S_ASSIGN, S_IF, S_WHILE, S_RETURN, S_EXPR = range(6)

BINOPS = {
    "+": 0, "-": 1, "*": 2, "/": 3, "%": 4,
    "==": 5, "!=": 6, "<": 7, "<=": 8, ">": 9, ">=": 10,
}
BUILTIN_CODES = {"assert_eq": 0, "assert_true": 1, "assert_false": 2, "len": 3, "char_at": 4}
assert set(BUILTIN_CODES) == BUILTINS


def lower_expr(e):
    if isinstance(e, Var):
        return (E_VAR, e.name, e.line, e.col)
    if isinstance(e, (IntLit, BoolLit, StrLit)):
        return (E_CONST, e.value)
    if isinstance(e, Binary):
        left, right = lower_expr(e.left), lower_expr(e.right)
        if e.op == "&&":
            return (E_AND, left, right, e.line, e.col)
        if e.op == "||":
            return (E_OR, left, right, e.line, e.col)
        return (E_BIN, BINOPS[e.op], left, right, e.line, e.col)
    if isinstance(e, Unary):
        return (E_NOT if e.op == "!" else E_NEG, lower_expr(e.operand), e.line, e.col)
    if isinstance(e, Call):
        args = tuple(lower_expr(a) for a in e.args)
        if e.name in BUILTIN_CODES:
            return (E_BUILTIN, BUILTIN_CODES[e.name], args, e.line, e.col)
        return (E_CALL, e.name, args, e.line, e.col)
    raise TypeError(f"cannot lower {e!r}")


def lower_block(stmts):
    return tuple(lower_stmt(s) for s in stmts)


def lower_stmt(s):
    if isinstance(s, Let):
        return (S_LET, s.sid, s.line, s.col, s.name, lower_expr(s.value))
    if isinstance(s, Assign):
        return (S_ASSIGN, s.sid, s.line, s.col, s.name, lower_expr(s.value))
    if isinstance(s, If):
        orelse = lower_block(s.orelse) if s.orelse is not None else ()
        return (S_IF, s.sid, s.line, s.col, lower_expr(s.cond), lower_block(s.then),
                orelse, s.bid)
    if isinstance(s, While):
        return (S_WHILE, s.sid, s.line, s.col, lower_expr(s.cond), lower_block(s.body),
                s.bid)
    if isinstance(s, Return):
        value = lower_expr(s.value) if s.value is not None else None
        return (S_RETURN, s.sid, s.line, s.col, value)
    if isinstance(s, ExprStmt):
        return (S_EXPR, s.sid, s.line, s.col, lower_expr(s.expr))
    raise TypeError(f"cannot lower {s!r}")


def lower_function(f):
    return (tuple(f.params), lower_block(f.body), f.name, f.file)


def lower_functions(functions):
    return {f.name: lower_function(f) for f in functions}
