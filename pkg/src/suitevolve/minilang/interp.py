"""Coverage-instrumented execution of test methods.

The compiled kernel (``_ckernel``) is used when it was built; otherwise the
pure-Python kernel runs. Set ``SUITEVOLVE_PURE_PYTHON=1`` to force the
fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from . import _kernel
from .coverage import CoverageReport
from .errors import UsageError

if os.environ.get("SUITEVOLVE_PURE_PYTHON"):
    _impl = _kernel
else:
    try:
        from . import _ckernel as _impl
    except ImportError:  # extension not built
        _impl = _kernel

KERNEL = "cython" if _impl is not _kernel else "python"

DEFAULT_STEP_BUDGET = 100_000
MAX_CALL_DEPTH = 256

PASS = _kernel.PASS
ASSERTION_FAILURE = _kernel.ASSERTION_FAILURE
RUNTIME_ERROR = _kernel.RUNTIME_ERROR
STEP_BUDGET_EXCEEDED = _kernel.STEP_BUDGET_EXCEEDED

show_value = _kernel.show


def get_kernel(name=None):
    """Return a kernel module by name (``"python"``/``"cython"``) or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernel
    if name == "cython":
        from . import _ckernel
        return _ckernel
    raise ValueError(f"unknown kernel {name!r}")


@dataclass(frozen=True)
class Frame:
    function: str
    file: str
    line: int
    col: int

    def __str__(self):
        return f"  at {self.function} ({self.file}:{self.line}:{self.col})"


@dataclass(frozen=True)
class RunOutcome:
    status: str
    message: str
    frames: tuple
    coverage: CoverageReport = field(repr=False)
    steps_used: int

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def trace(self) -> str:
        """``ERROR <kind> at <file>:<line>:<col> in <function>`` plus one frame per line."""
        if not self.frames:
            return ""
        top = self.frames[0]
        lines = [f"ERROR {self.status} at {top.file}:{top.line}:{top.col} in {top.function}"]
        lines.extend(str(f) for f in self.frames)
        return "\n".join(lines)

    @property
    def report(self) -> str:
        """Trace followed by the failure message; what the repair prompt shows."""
        if self.passed:
            return ""
        return f"{self.trace}\n  message: {self.message}"


def function_table(program, suite_code):
    table = dict(program.code)
    for name, fn in suite_code.items():
        if name in table:
            raise UsageError(f"suite function {name!r} shadows a program function")
        table[name] = fn
    return table


def execute(program, table, entry, step_budget=DEFAULT_STEP_BUDGET, kernel=None):
    """Run ``entry`` from a prepared function table against ``program``."""
    impl = kernel or _impl
    status, message, frames, steps, lines, arms = impl.execute(
        table, entry, step_budget, MAX_CALL_DEPTH)
    cov = CoverageReport.from_raw(program, lines, arms)
    return RunOutcome(status, message, tuple(Frame(*f) for f in frames), cov, steps)


def run_test_method(program, suite, method_name, step_budget=DEFAULT_STEP_BUDGET,
                    kernel=None):
    """Interpret one test method of ``suite`` with ``program``'s functions in scope.

    ``suite`` is anything exposing ``code`` (a lowered function table) and
    ``method_names``.
    """
    if method_name not in suite.method_names:
        raise UsageError(f"{method_name!r} is not a test method of the suite")
    table = function_table(program, suite.code)
    return execute(program, table, method_name, step_budget, kernel)


def call_function(program, name, args, step_budget=DEFAULT_STEP_BUDGET):
    """Evaluate ``name(*args)`` in ``program``; returns ``(status, value, message)``."""
    return _impl.call_value(program.code, name, args, step_budget, MAX_CALL_DEPTH)
