"""The parsed program under test."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Tuple

from .errors import ParseError
from .lower import lower_functions
from .nodes import FunctionDecl, If, While, iter_stmts
from .parser import parse_decls
from .printer import format_unit


@dataclass(frozen=True, eq=False)
class Program:
    """A parsed MiniLang source file.

    ``line_index`` maps statement id to source line, ``branch_index`` maps
    branch id to ``(condition line, arm count)``. Equality is structural over
    the function declarations.
    """

    source_path: str
    functions: Tuple[FunctionDecl, ...]
    line_index: Dict[int, int] = field(repr=False)
    branch_index: Dict[int, Tuple[int, int]] = field(repr=False)
    stmt_owner: Dict[int, str] = field(repr=False)
    branch_owner: Dict[int, str] = field(repr=False)

    @classmethod
    def from_functions(cls, functions, source_path="<input>"):
        line_index, branch_index, stmt_owner, branch_owner = {}, {}, {}, {}
        for f in functions:
            for s in iter_stmts(f.body):
                line_index[s.sid] = s.line
                stmt_owner[s.sid] = f.name
                if isinstance(s, (If, While)):
                    branch_index[s.bid] = (s.line, 2)
                    branch_owner[s.bid] = f.name
        return cls(source_path, tuple(functions), line_index, branch_index,
                   stmt_owner, branch_owner)

    def __eq__(self, other):
        if not isinstance(other, Program):
            return NotImplemented
        return self.functions == other.functions

    def __hash__(self):
        return hash(self.functions)

    def function(self, name: str) -> FunctionDecl:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    @property
    def names(self):
        return [f.name for f in self.functions]

    @property
    def focal_functions(self):
        return [f for f in self.functions if f.is_focal]

    @cached_property
    def source(self) -> str:
        return format_unit(self.functions)

    @cached_property
    def key(self) -> str:
        """Content hash identifying this program (used to pair coverage reports)."""
        return hashlib.sha256(self.source.encode()).hexdigest()[:16]

    @cached_property
    def code(self) -> dict:
        """Lowered function table for the execution kernels."""
        return lower_functions(self.functions)

    @cached_property
    def focal_lines(self) -> frozenset:
        """Every ``(function, line)`` holding a statement of a focal function."""
        focal = {f.name for f in self.functions if f.is_focal}
        return frozenset((self.stmt_owner[sid], line)
                         for sid, line in self.line_index.items()
                         if self.stmt_owner[sid] in focal)

    @cached_property
    def declared_lines(self) -> frozenset:
        return frozenset((self.stmt_owner[sid], line)
                         for sid, line in self.line_index.items())

    @cached_property
    def focal_branches(self) -> frozenset:
        focal = {f.name for f in self.functions if f.is_focal}
        return frozenset(b for b, owner in self.branch_owner.items() if owner in focal)


def parse(source: str, path: str = "<input>") -> Program:
    """Parse a program file. Test declarations are rejected.

    Raises :class:`ParseError` on any syntax violation.
    """
    return Program.from_functions(parse_decls(source, path), path)


def parse_file(path) -> Program:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse(fh.read(), str(path))


__all__ = ["Program", "ParseError", "parse", "parse_file"]
