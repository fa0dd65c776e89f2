"""First-order mutant generation and kill analysis over MiniLang programs.

Operators follow the default group of common JVM mutation tools, restricted
to what MiniLang can express:

* ``ArithmeticReplace``   ``+``<->``-``, ``*``<->``/``, ``%``->``*``
* ``RelationalBoundary``  ``<``<->``<=``, ``>``<->``>=``
* ``NegateConditional``   ``==``<->``!=``; ``if``/``while`` condition ``c`` -> ``!(c)``
* ``ReturnValueMutate``   int ``e`` -> ``e + 1``, bool ``e`` -> ``!e``, string ``e`` -> ``""``
* ``ConstantReplace``     int literal ``c`` -> ``c + 1``, bool literal ``b`` -> ``!b``

Every mutant replaces exactly one expression node.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

from .minilang.interp import DEFAULT_STEP_BUDGET, MAX_CALL_DEPTH, PASS, function_table, get_kernel
from .minilang.nodes import (
    Assign, Binary, BoolLit, Call, ExprStmt, If, IntLit, Let, Return, StrLit,
    Unary, Var, While,
)
from .minilang.parser import parse_decls
from .minilang.printer import format_expr, format_function
from .minilang.program import Program

log = logging.getLogger(__name__)

INT_MAX = 2**63 - 1


class MutationOperator(str, Enum):
    ARITHMETIC_REPLACE = "ArithmeticReplace"
    RELATIONAL_BOUNDARY = "RelationalBoundary"
    NEGATE_CONDITIONAL = "NegateConditional"
    RETURN_VALUE_MUTATE = "ReturnValueMutate"
    CONSTANT_REPLACE = "ConstantReplace"

    def __str__(self):
        return self.value


KILLED = "killed"
SURVIVED = "survived"
NOT_RUN = "not_run"

_ARITH = {"+": "-", "-": "+", "*": "/", "/": "*", "%": "*"}
_BOUNDARY = {"<": "<=", "<=": "<", ">": ">=", ">=": ">"}
_NEGATE = {"==": "!=", "!=": "=="}
_INT_OPS = {"+", "-", "*", "/", "%"}
_ORDER_OPS = {"<", "<=", ">", ">="}
_BOOL_OPS = {"&&", "||"}


@dataclass(frozen=True)
class Mutant:
    mutant_id: int
    operator: MutationOperator
    function: str
    path: Tuple  # steps from the function body to the replaced expression
    line: int
    col: int
    original_fragment: str
    mutated_fragment: str
    in_focal: bool
    status: str = NOT_RUN
    program: Optional[Program] = field(default=None, compare=False, repr=False)

    @property
    def site(self):
        return (self.function, self.path)

    def location(self, path: str) -> str:
        return f"{path}:{self.line}:{self.col}"

    def describe(self, path: str) -> str:
        return (f"{self.mutant_id} {self.operator} {path}:{self.line} "
                f"{self.original_fragment} -> {self.mutated_fragment}")


@dataclass(frozen=True)
class MutationResult:
    mutants: Tuple[Mutant, ...]

    @property
    def total_count(self) -> int:
        return len(self.mutants)

    @property
    def killed_count(self) -> int:
        return sum(1 for m in self.mutants if m.status == KILLED)

    @property
    def msct_percent(self) -> float:
        if not self.mutants:
            return 100.0
        return 100.0 * self.killed_count / self.total_count


# ------------------------------------------------------------ tree addressing


def _children(node):
    """``(step, child)`` pairs in source order; a step is ``(field, index)``."""
    if isinstance(node, (Let, Assign)):
        return [(("value", None), node.value)]
    if isinstance(node, ExprStmt):
        return [(("expr", None), node.expr)]
    if isinstance(node, Return):
        return [] if node.value is None else [(("value", None), node.value)]
    if isinstance(node, If):
        out = [(("cond", None), node.cond)]
        out += [(("then", i), s) for i, s in enumerate(node.then)]
        if node.orelse is not None:
            out += [(("orelse", i), s) for i, s in enumerate(node.orelse)]
        return out
    if isinstance(node, While):
        return [(("cond", None), node.cond)] + [(("body", i), s) for i, s in enumerate(node.body)]
    if isinstance(node, Unary):
        return [(("operand", None), node.operand)]
    if isinstance(node, Binary):
        return [(("left", None), node.left), (("right", None), node.right)]
    if isinstance(node, Call):
        return [(("args", i), a) for i, a in enumerate(node.args)]
    return []


def get_at(body, path):
    (fld, idx), rest = path[0], path[1:]
    assert fld == "body"
    node = body[idx]
    for fld, idx in rest:
        node = getattr(node, fld)
        if idx is not None:
            node = node[idx]
    return node


def _replace_in(node, path, new):
    if not path:
        return new
    (fld, idx), rest = path[0], path[1:]
    current = getattr(node, fld)
    if idx is None:
        return replace(node, **{fld: _replace_in(current, rest, new)})
    items = list(current)
    items[idx] = _replace_in(items[idx], rest, new)
    return replace(node, **{fld: tuple(items)})


def replace_at(body, path, new):
    """Return a copy of ``body`` with the node at ``path`` replaced by ``new``."""
    (fld, idx), rest = path[0], path[1:]
    assert fld == "body"
    items = list(body)
    items[idx] = _replace_in(items[idx], rest, new)
    return tuple(items)


def walk(body):
    """Pre-order ``(path, node)`` over statements and expressions of a body."""
    stack = [((("body", i),), s) for i, s in reversed(list(enumerate(body)))]
    while stack:
        path, node = stack.pop()
        yield path, node
        kids = _children(node)
        for step, child in reversed(kids):
            stack.append((path + (step,), child))


# -------------------------------------------------------------- type guesses


def _expr_type(e, vars_, returns):
    if isinstance(e, IntLit):
        return "int"
    if isinstance(e, BoolLit):
        return "bool"
    if isinstance(e, StrLit):
        return "str"
    if isinstance(e, Unary):
        return "bool" if e.op == "!" else "int"
    if isinstance(e, Binary):
        return "int" if e.op in _INT_OPS else "bool"
    if isinstance(e, Var):
        return vars_.get(e.name)
    if isinstance(e, Call):
        if e.name == "len":
            return "int"
        if e.name == "char_at":
            return "str"
        return returns.get(e.name)
    return None


def _note(vars_, e, t):
    if isinstance(e, Var) and t and e.name not in vars_:
        vars_[e.name] = t


def infer_types(functions):
    """Best-effort static types: ``(variables per function, return type per function)``.

    MiniLang is dynamically typed; a variable's type is taken from its
    initialiser or, failing that, from how it is used (arithmetic operand ->
    int, logical operand or condition -> bool, ``len`` argument -> str).
    Unknown types map to ``None``.
    """
    returns = {}
    per_fn = {f.name: {} for f in functions}
    for _ in range(4):
        for f in functions:
            vars_ = per_fn[f.name]
            for _path, node in walk(f.body):
                if isinstance(node, (Let, Assign)):
                    t = _expr_type(node.value, vars_, returns)
                    if t and node.name not in vars_:
                        vars_[node.name] = t
                elif isinstance(node, (If, While)):
                    _note(vars_, node.cond, "bool")
                elif isinstance(node, Binary):
                    if node.op in _INT_OPS or node.op in _ORDER_OPS:
                        _note(vars_, node.left, "int")
                        _note(vars_, node.right, "int")
                    elif node.op in _BOOL_OPS:
                        _note(vars_, node.left, "bool")
                        _note(vars_, node.right, "bool")
                    else:
                        lt = _expr_type(node.left, vars_, returns)
                        rt = _expr_type(node.right, vars_, returns)
                        _note(vars_, node.left, rt)
                        _note(vars_, node.right, lt)
                elif isinstance(node, Unary):
                    _note(vars_, node.operand, "bool" if node.op == "!" else "int")
                elif isinstance(node, Call):
                    if node.name == "len" and node.args:
                        _note(vars_, node.args[0], "str")
                    elif node.name == "char_at" and len(node.args) == 2:
                        _note(vars_, node.args[0], "str")
                        _note(vars_, node.args[1], "int")
                elif isinstance(node, Return) and node.value is not None:
                    t = _expr_type(node.value, vars_, returns)
                    if t and f.name not in returns:
                        returns[f.name] = t
    return per_fn, returns


def param_types(program):
    """Guessed type (``"int"``, ``"bool"``, ``"str"`` or None) of each parameter."""
    per_fn, _ = infer_types(program.functions)
    return {f.name: [per_fn[f.name].get(p) for p in f.params] for f in program.functions}


# --------------------------------------------------------------- enumeration


def _node_mutations(node, path, vars_, returns):
    """Candidate ``(operator, expr path, replacement)`` triples for one node."""
    out = []
    if isinstance(node, Return) and node.value is not None:
        t = _expr_type(node.value, vars_, returns)
        vpath = path + (("value", None),)
        if t == "int":
            v = node.value
            out.append((MutationOperator.RETURN_VALUE_MUTATE, vpath,
                        Binary("+", v, IntLit(1, v.line, v.col), v.line, v.col)))
        elif t == "bool":
            v = node.value
            out.append((MutationOperator.RETURN_VALUE_MUTATE, vpath,
                        Unary("!", v, v.line, v.col)))
        elif t == "str":
            v = node.value
            out.append((MutationOperator.RETURN_VALUE_MUTATE, vpath, StrLit("", v.line, v.col)))
    elif isinstance(node, (If, While)):
        out.append((MutationOperator.NEGATE_CONDITIONAL, path + (("cond", None),),
                    Unary("!", node.cond, node.cond.line, node.cond.col)))
    elif isinstance(node, Binary):
        if node.op in _ARITH:
            out.append((MutationOperator.ARITHMETIC_REPLACE, path,
                        replace(node, op=_ARITH[node.op])))
        elif node.op in _BOUNDARY:
            out.append((MutationOperator.RELATIONAL_BOUNDARY, path,
                        replace(node, op=_BOUNDARY[node.op])))
        elif node.op in _NEGATE:
            out.append((MutationOperator.NEGATE_CONDITIONAL, path,
                        replace(node, op=_NEGATE[node.op])))
    elif isinstance(node, IntLit):
        if node.value < INT_MAX:
            out.append((MutationOperator.CONSTANT_REPLACE, path, replace(node, value=node.value + 1)))
    elif isinstance(node, BoolLit):
        out.append((MutationOperator.CONSTANT_REPLACE, path,
                    Unary("!", node, node.line, node.col)))
    return out


def enumerate_mutants(program: Program, focal_only: bool = True):
    """All first-order mutants in source order, deduplicated by mutated source.

    Each mutant carries its mutated :class:`Program`.
    """
    per_fn, returns = infer_types(program.functions)
    mutants = []
    seen = set()
    for fi, f in enumerate(program.functions):
        if focal_only and not f.is_focal:
            continue
        vars_ = per_fn[f.name]
        for path, node in walk(f.body):
            for op, epath, new in _node_mutations(node, path, vars_, returns):
                old = get_at(f.body, epath)
                new_body = replace_at(f.body, epath, new)
                new_fn = replace(f, body=new_body)
                text = format_function(new_fn)
                if (f.name, text) in seen:
                    continue
                seen.add((f.name, text))
                # the rewrite must survive a print/parse round trip
                reparsed = parse_decls(text, program.source_path)[0]
                if reparsed.body != new_body:
                    raise AssertionError(f"mutant at {f.name}{epath} does not round-trip")
                functions = list(program.functions)
                functions[fi] = new_fn
                mutated = Program.from_functions(functions, program.source_path)
                original_fragment = format_expr(old)
                mutated_fragment = format_expr(new)
                mutants.append(Mutant(
                    len(mutants), op, f.name, epath, old.line, old.col,
                    original_fragment, mutated_fragment, f.is_focal, NOT_RUN, mutated,
                ))
    return mutants


# ----------------------------------------------------------------- execution


def kills(mutant, suite, method_name, step_budget=DEFAULT_STEP_BUDGET, kernel=None):
    """True when ``method_name`` does not pass against ``mutant``'s program."""
    impl = kernel or get_kernel()
    table = function_table(mutant.program, suite.code)
    status = impl.execute(table, method_name, step_budget, MAX_CALL_DEPTH)[0]
    return status != PASS


def execute_mutants(program, mutants, passing_tests, suite,
                    step_budget=DEFAULT_STEP_BUDGET, kernel=None) -> MutationResult:
    """Run ``passing_tests`` against every mutant, stopping at the first failing test.

    Assertion failures, runtime errors and exhausted step budgets all kill.
    """
    impl = kernel or get_kernel()
    out = []
    for m in mutants:
        if m.program is None:
            raise RuntimeError(f"mutant {m.mutant_id} has no program attached")
        table = function_table(m.program, suite.code)
        status = SURVIVED
        for name in passing_tests:
            if impl.execute(table, name, step_budget, MAX_CALL_DEPTH)[0] != PASS:
                status = KILLED
                break
        out.append(replace(m, status=status))
    return MutationResult(tuple(out))


def mutant_records(result: MutationResult, path: str):
    """Report rows: id, operator, ``file:line`` site, status."""
    return [
        {
            "id": m.mutant_id,
            "operator": str(m.operator),
            "site": f"{path}:{m.line}",
            "function": m.function,
            "original": m.original_fragment,
            "mutated": m.mutated_fragment,
            "status": m.status,
        }
        for m in result.mutants
    ]
