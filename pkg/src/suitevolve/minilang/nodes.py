"""AST node types for MiniLang.

Nodes are frozen dataclasses. Source positions and the statement/branch ids
assigned by the parser are excluded from equality, so two trees compare equal
iff they have the same structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


def _pos():
    return field(default=0, compare=False, repr=False)


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class IntLit:
    value: int
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class StrLit:
    value: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Var:
    name: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Unary:
    op: str  # "!" or "-"
    operand: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...]
    line: int = _pos()
    col: int = _pos()


Expr = Union[IntLit, BoolLit, StrLit, Var, Unary, Binary, Call]


# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Let:
    name: str
    value: Expr
    line: int = _pos()
    col: int = _pos()
    sid: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr
    line: int = _pos()
    col: int = _pos()
    sid: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Tuple["Stmt", ...]
    orelse: Optional[Tuple["Stmt", ...]] = None
    line: int = _pos()
    col: int = _pos()
    sid: int = field(default=-1, compare=False, repr=False)
    bid: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Tuple["Stmt", ...]
    line: int = _pos()
    col: int = _pos()
    sid: int = field(default=-1, compare=False, repr=False)
    bid: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Return:
    value: Optional[Expr]
    line: int = _pos()
    col: int = _pos()
    sid: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    line: int = _pos()
    col: int = _pos()
    sid: int = field(default=-1, compare=False, repr=False)


Stmt = Union[Let, Assign, If, While, Return, ExprStmt]

EXPR_TYPES = (IntLit, BoolLit, StrLit, Var, Unary, Binary, Call)
STMT_TYPES = (Let, Assign, If, While, Return, ExprStmt)


# -------------------------------------------------------------- declarations


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: Tuple[str, ...]
    body: Tuple[Stmt, ...]
    is_test: bool = False
    line: int = _pos()
    col: int = _pos()
    file: str = field(default="<input>", compare=False, repr=False)

    @property
    def is_focal(self) -> bool:
        # leading underscore is the "private" marker
        return not self.is_test and not self.name.startswith("_")


def iter_stmts(body):
    """Yield every statement of ``body`` in pre-order, descending into blocks."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from iter_stmts(stmt.then)
            if stmt.orelse is not None:
                yield from iter_stmts(stmt.orelse)
        elif isinstance(stmt, While):
            yield from iter_stmts(stmt.body)


def iter_exprs(expr):
    """Yield ``expr`` and all its sub-expressions in pre-order."""
    yield expr
    if isinstance(expr, Unary):
        yield from iter_exprs(expr.operand)
    elif isinstance(expr, Binary):
        yield from iter_exprs(expr.left)
        yield from iter_exprs(expr.right)
    elif isinstance(expr, Call):
        for arg in expr.args:
            yield from iter_exprs(arg)


def stmt_exprs(stmt):
    """Top-level expressions owned directly by ``stmt`` (not nested blocks)."""
    if isinstance(stmt, (Let, Assign)):
        return (stmt.value,)
    if isinstance(stmt, (If, While)):
        return (stmt.cond,)
    if isinstance(stmt, Return):
        return () if stmt.value is None else (stmt.value,)
    return (stmt.expr,)


def called_names(body):
    """Names of all functions called anywhere in ``body``."""
    names = set()
    for stmt in iter_stmts(body):
        for top in stmt_exprs(stmt):
            for e in iter_exprs(top):
                if isinstance(e, Call):
                    names.add(e.name)
    return names


def count_stmts(body) -> int:
    return sum(1 for _ in iter_stmts(body))
