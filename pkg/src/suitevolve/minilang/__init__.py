"""MiniLang: the embedded language programs-under-test and tests are written in."""

from .coverage import CoverageReport, merge_coverage
from .errors import MiniLangError, ParseError, UsageError
from .interp import (
    ASSERTION_FAILURE, DEFAULT_STEP_BUDGET, KERNEL, PASS, RUNTIME_ERROR,
    STEP_BUDGET_EXCEEDED, RunOutcome, call_function, run_test_method,
)
from .nodes import FunctionDecl
from .parser import parse_decls
from .printer import format_function, format_unit
from .program import Program, parse, parse_file

__all__ = [
    "ASSERTION_FAILURE", "CoverageReport", "DEFAULT_STEP_BUDGET", "FunctionDecl",
    "KERNEL", "MiniLangError", "PASS", "ParseError", "Program", "RUNTIME_ERROR",
    "RunOutcome", "STEP_BUDGET_EXCEEDED", "UsageError", "call_function",
    "format_function", "format_unit", "merge_coverage", "parse", "parse_decls",
    "parse_file", "run_test_method",
]
