"""Test suites as GA chromosomes: test methods plus helper functions."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Tuple

from .minilang.lower import lower_functions
from .minilang.nodes import (
    Assign, Binary, Call, ExprStmt, FunctionDecl, If, Let, Return, Unary,
    While, called_names, count_stmts, iter_exprs, iter_stmts, stmt_exprs,
)
from .minilang.parser import ASSERTIONS, parse_decls
from .minilang.printer import format_block, format_function, format_unit

UNKNOWN = "unknown"
PASSING = "passing"
FAILING = "failing"

DEFAULT_FILENAME = "suite.test.mini"


def count_assertions(body) -> int:
    n = 0
    for s in iter_stmts(body):
        for top in stmt_exprs(s):
            for e in iter_exprs(top):
                if isinstance(e, Call) and e.name in ASSERTIONS:
                    n += 1
    return n


@dataclass(frozen=True)
class TestMethod:
    __test__ = False  # not a pytest class

    name: str
    body: Tuple
    status: str = field(default=UNKNOWN, compare=False)
    file: str = field(default=DEFAULT_FILENAME, compare=False, repr=False)

    @property
    def assertion_count(self) -> int:
        return count_assertions(self.body)

    @property
    def decl(self) -> FunctionDecl:
        return FunctionDecl(self.name, (), self.body, True, file=self.file)

    @cached_property
    def body_text(self) -> str:
        return format_block(self.body)


@dataclass(frozen=True)
class FitnessScore:
    lcct: float
    bcct: float
    msct: float
    scalar: float = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "scalar", 0.3 * self.bcct + 0.2 * self.lcct + 0.5 * self.msct)

    def as_dict(self):
        return {"lcct": self.lcct, "bcct": self.bcct, "msct": self.msct,
                "scalar": self.scalar}


@dataclass(frozen=True, eq=False)
class TestSuite:
    """An immutable test suite.

    Construct through :meth:`create` (or :func:`split_methods`), which
    re-derives source positions from the printed text so run traces point
    into :attr:`source`.
    """

    __test__ = False

    methods: Tuple[TestMethod, ...]
    helpers: Tuple[FunctionDecl, ...]
    provenance: str = "unknown"
    suite_id: Optional[str] = None
    filename: str = DEFAULT_FILENAME

    @classmethod
    def create(cls, methods=(), helpers=(), provenance="unknown", suite_id=None,
               filename=DEFAULT_FILENAME):
        methods, helpers = tuple(methods), tuple(helpers)
        statuses = {m.name: m.status for m in methods}
        text = format_unit([*helpers, *(m.decl for m in methods)])
        decls = parse_decls(text, filename, allow_tests=True, instrument=False)
        new_helpers = tuple(d for d in decls if not d.is_test)
        new_methods = tuple(TestMethod(d.name, d.body, statuses[d.name], d.file)
                            for d in decls if d.is_test)
        suite = cls(new_methods, new_helpers, provenance, suite_id, filename)
        suite.__dict__["source"] = text
        if suite_id is None:
            object.__setattr__(suite, "suite_id", suite.content_hash[:12])
        return suite

    def derive(self, methods=None, helpers=None, **kw):
        """A new suite with some parts replaced; source positions are refreshed."""
        return TestSuite.create(
            self.methods if methods is None else methods,
            self.helpers if helpers is None else helpers,
            kw.get("provenance", self.provenance),
            kw.get("suite_id", self.suite_id),
            kw.get("filename", self.filename),
        )

    @cached_property
    def source(self) -> str:
        return format_unit([*self.helpers, *(m.decl for m in self.methods)])

    @cached_property
    def content_hash(self) -> str:
        return hashlib.sha256(self.source.encode()).hexdigest()

    @cached_property
    def size(self):
        stmts = sum(count_stmts(m.body) for m in self.methods)
        stmts += sum(count_stmts(h.body) for h in self.helpers)
        return (len(self.methods), stmts)

    @cached_property
    def code(self) -> dict:
        return lower_functions([*self.helpers, *(m.decl for m in self.methods)])

    @property
    def method_names(self):
        return [m.name for m in self.methods]

    @property
    def helper_names(self):
        return [h.name for h in self.helpers]

    def method(self, name) -> TestMethod:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    def helper_closure(self, body) -> list:
        """Helpers reachable (transitively) from calls in ``body``, in suite order."""
        by_name = {h.name: h for h in self.helpers}
        seen, todo = set(), list(called_names(body))
        while todo:
            name = todo.pop()
            if name in seen or name not in by_name:
                continue
            seen.add(name)
            todo.extend(called_names(by_name[name].body))
        return [h for h in self.helpers if h.name in seen]

    def method_closure_text(self, method: TestMethod) -> str:
        """Printed method plus its helper closure: the unit that determines its behaviour."""
        parts = [format_function(h) for h in self.helper_closure(method.body)]
        parts.append(format_function(method.decl))
        return "\n\n".join(parts)

    def __len__(self):
        return len(self.methods)

    def __repr__(self):
        return (f"TestSuite(id={self.suite_id!r}, methods={len(self.methods)}, "
                f"helpers={len(self.helpers)}, provenance={self.provenance!r})")


# ----------------------------------------------------------------- operations


def split_methods(suite_source: str, filename: str = DEFAULT_FILENAME,
                  provenance: str = "unknown", suite_id=None) -> TestSuite:
    """Parse a test file; ``test`` declarations become methods, the rest helpers.

    Raises :class:`~suitevolve.minilang.ParseError` on syntax errors.
    """
    decls = parse_decls(suite_source, filename, allow_tests=True, instrument=False)
    methods = [TestMethod(d.name, d.body) for d in decls if d.is_test]
    helpers = [d for d in decls if not d.is_test]
    return TestSuite.create(methods, helpers, provenance, suite_id, filename)


def _fresh_name(base, taken):
    k = 1
    while f"{base}_m{k}" in taken:
        k += 1
    return f"{base}_m{k}"


def rename_calls_expr(e, mapping):
    if isinstance(e, Call):
        args = tuple(rename_calls_expr(a, mapping) for a in e.args)
        return replace(e, name=mapping.get(e.name, e.name), args=args)
    if isinstance(e, Binary):
        return replace(e, left=rename_calls_expr(e.left, mapping),
                       right=rename_calls_expr(e.right, mapping))
    if isinstance(e, Unary):
        return replace(e, operand=rename_calls_expr(e.operand, mapping))
    return e


def rename_calls(body, mapping):
    """Rewrite call targets in ``body`` according to ``mapping``."""
    if not mapping:
        return body
    out = []
    for s in body:
        if isinstance(s, (Let, Assign)):
            s = replace(s, value=rename_calls_expr(s.value, mapping))
        elif isinstance(s, ExprStmt):
            s = replace(s, expr=rename_calls_expr(s.expr, mapping))
        elif isinstance(s, Return):
            if s.value is not None:
                s = replace(s, value=rename_calls_expr(s.value, mapping))
        elif isinstance(s, If):
            s = replace(s, cond=rename_calls_expr(s.cond, mapping),
                        then=rename_calls(s.then, mapping),
                        orelse=None if s.orelse is None else rename_calls(s.orelse, mapping))
        elif isinstance(s, While):
            s = replace(s, cond=rename_calls_expr(s.cond, mapping),
                        body=rename_calls(s.body, mapping))
        out.append(s)
    return tuple(out)


def _combine(a_methods, a_helpers, b_methods, b_helpers, dedupe):
    methods = list(a_methods)
    helpers = list(a_helpers)
    taken = {m.name for m in methods} | {h.name for h in helpers}
    helper_text = {h.name: format_function(h) for h in helpers}

    mapping = {}
    renamed_b_helpers = []
    b_names = {h.name for h in b_helpers}
    for h in b_helpers:
        if helper_text.get(h.name) == format_function(h):
            continue  # identical helper already present
        if h.name in taken:
            new = _fresh_name(h.name, taken | b_names)
            mapping[h.name] = new
            taken.add(new)
        else:
            taken.add(h.name)
        renamed_b_helpers.append(h)
    for h in renamed_b_helpers:
        h = replace(h, name=mapping.get(h.name, h.name),
                    body=rename_calls(h.body, mapping))
        helpers.append(h)
        helper_text[h.name] = format_function(h)

    bodies = {m.body_text for m in methods}
    for m in b_methods:
        body = rename_calls(m.body, mapping)
        m = TestMethod(m.name, body, m.status)
        if dedupe and m.body_text in bodies:
            continue
        if m.name in taken:
            m = TestMethod(_fresh_name(m.name, taken), m.body, m.status)
        taken.add(m.name)
        bodies.add(m.body_text)
        methods.append(m)
    return methods, helpers


def merge_suites(a: TestSuite, b: TestSuite, *, dedupe: bool = True,
                 provenance=None, suite_id=None) -> TestSuite:
    """Concatenate two suites.

    Name collisions rename the later item to ``<name>_m<k>``; methods whose
    printed body already occurs are dropped when ``dedupe`` is set.
    """
    if dedupe:
        # dedupe a against itself too, so merge(s, s) == s holds for any s
        a_methods, seen = [], set()
        for m in a.methods:
            if m.body_text not in seen:
                seen.add(m.body_text)
                a_methods.append(m)
    else:
        a_methods = a.methods
    methods, helpers = _combine(a_methods, a.helpers, b.methods, b.helpers, dedupe)
    return TestSuite.create(methods, helpers, provenance or a.provenance, suite_id,
                            a.filename)


def prune_failing(suite: TestSuite, outcomes) -> TestSuite:
    """Drop methods whose outcome is not a pass, then unreferenced helpers.

    Surviving methods are marked passing.
    """
    keep = [TestMethod(m.name, m.body, PASSING) for m in suite.methods
            if outcomes[m.name].passed]
    referenced = set()
    for m in keep:
        referenced.update(h.name for h in suite.helper_closure(m.body))
    helpers = [h for h in suite.helpers if h.name in referenced]
    return suite.derive(keep, helpers)


def size_of(suite: TestSuite):
    """``(method_count, statement_count)``; statements include helpers'."""
    return suite.size


def with_statuses(suite: TestSuite, outcomes) -> TestSuite:
    methods = [TestMethod(m.name, m.body, PASSING if outcomes[m.name].passed else FAILING)
               for m in suite.methods]
    return suite.derive(methods)
