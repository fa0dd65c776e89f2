"""Offline stand-in for a chat-completion model.

The mock reads the sections of the rendered prompt, interprets the program
under test to compute expected values, and answers in MiniLang. Output is a
pure function of ``(seed, template id, user content, request seed)``.
Temperature widens exploration: hotter requests yield more tests and pick
boundary values taken from the program's literals more often. There is no
per-agent behaviour beyond that.
"""

from __future__ import annotations

import hashlib
import logging
import random
import re
import threading
from dataclasses import replace

from ..minilang.errors import ParseError
from ..minilang.interp import (
    DEFAULT_STEP_BUDGET, MAX_CALL_DEPTH, PASS, execute, function_table, get_kernel,
)
from ..minilang.lower import lower_functions
from ..minilang.nodes import (
    BoolLit, Call, ExprStmt, FunctionDecl, IntLit, Let, Return, StrLit, Var,
    iter_exprs, iter_stmts, stmt_exprs,
)
from ..minilang.parser import parse_decls
from ..minilang.printer import format_expr, format_function, format_unit
from ..minilang.program import parse
from ..mutation import param_types
from ..seeding import mix
from .gateway import CompletionResponse
from .templates import sections

log = logging.getLogger(__name__)

ARG_RANGE = (-10, 10)
_WORDS = ("", "a", "ab", "ba", "aba", "abc", "level", "banana", "noon", "xyz")
_MISSED_LINE = re.compile(r"^MISSED LINE (\w+):(\d+)$")
_MISSED_BRANCH = re.compile(r"^MISSED BRANCH (\w+):(\d+) arm=(then|else)$")


def literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format_expr(StrLit(value))


def _perturb(value):
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        return value + 1
    return value + "x"


def _typo(name, rng):
    if len(name) > 2 and rng.random() < 0.5:
        i = rng.randrange(len(name))
        return name[:i] + name[i + 1:]
    return name + rng.choice("sxe")


def strip_fences(text: str) -> str:
    """Drop markdown code fences a model may wrap around code."""
    lines = [ln for ln in text.strip().split("\n") if not ln.strip().startswith("```")]
    return "\n".join(lines) + "\n"


class MockBackend:
    name = "mock"

    def __init__(self, seed: int, *, wrong_rate: float = 0.1, typo_rate: float = 0.05,
                 helper_rate: float = 0.15, fence_rate: float = 0.05,
                 garbage_rate: float = 0.02, repair_success: float = 0.8,
                 fail_repairs: bool = False, step_budget: int = DEFAULT_STEP_BUDGET):
        if seed is None:
            raise ValueError("the mock backend requires a seed")
        self.seed = seed
        self.wrong_rate = wrong_rate
        self.typo_rate = typo_rate
        self.helper_rate = helper_rate
        self.fence_rate = fence_rate
        self.garbage_rate = garbage_rate
        self.repair_success = repair_success
        self.fail_repairs = fail_repairs
        self.step_budget = step_budget
        self._programs = {}
        self._lock = threading.Lock()

    # -- plumbing

    def complete(self, request) -> CompletionResponse:
        digest = hashlib.sha256(request.user.encode("utf-8")).hexdigest()
        rng = random.Random(mix(self.seed, request.template_id, digest, request.seed))
        secs = sections(request.user)
        tid = request.template_id
        if tid.startswith("gen_"):
            text = self._generate(rng, secs, request.temperature)
        elif tid == "repair":
            text = self._repair(rng, secs)
        elif tid == "coverage_enhance":
            text = self._enhance(rng, secs, request.temperature)
        elif tid == "mutator":
            text = self._mutate(rng, secs, request.temperature)
        else:
            text = ""
        return CompletionResponse(text, self.name, 0.0, request.temperature)

    def _program(self, source):
        with self._lock:
            prog = self._programs.get(source)
        if prog is None:
            prog = parse(source, "<prompt>")
            with self._lock:
                self._programs[source] = prog
        return prog

    def _finish(self, rng, text):
        if text and rng.random() < self.garbage_rate:
            return text[: rng.randrange(1, len(text))]  # truncated reply
        if text and rng.random() < self.fence_rate:
            return "```\n" + text + "```\n"
        return text

    # -- sampling

    def _consts(self, program):
        ints, strs = set(), set()
        for f in program.functions:
            for s in iter_stmts(f.body):
                for top in stmt_exprs(s):
                    for e in iter_exprs(top):
                        if isinstance(e, IntLit):
                            ints.add(e.value)
                        elif isinstance(e, StrLit):
                            strs.add(e.value)
        lo, hi = ARG_RANGE
        near = sorted({c + d for c in ints for d in (-1, 0, 1) if lo <= c + d <= hi})
        return near, sorted(strs)

    def _value(self, rng, ptype, consts, temperature):
        near, strs = consts
        if ptype == "str":
            if rng.random() < 0.5:
                return rng.choice(_WORDS + tuple(strs))
            return "".join(rng.choice("abc") for _ in range(rng.randint(0, 5)))
        if ptype == "bool":
            return rng.random() < 0.5
        if near and rng.random() < temperature:
            return rng.choice(near)
        return rng.randint(*ARG_RANGE)

    def _sample_call(self, rng, program, fn, temperature, tries=6):
        """``(args, value)`` for a call to ``fn`` that evaluates cleanly, or None."""
        types = param_types(program)[fn]
        consts = self._consts(program)
        for _ in range(tries):
            args = [self._value(rng, t, consts, temperature) for t in types]
            status, value, _msg = get_kernel().call_value(
                program.code, fn, args, self.step_budget, MAX_CALL_DEPTH)
            if status == PASS and value is not None:
                return args, value
        return None

    def _assertion(self, rng, call_text, value, helper=None):
        expected = _perturb(value) if rng.random() < self.wrong_rate else value
        if helper is not None and rng.random() < 0.5:
            return [f"{helper}({call_text}, {literal(expected)});"]
        if isinstance(value, bool) and rng.random() < 0.5:
            fn = "assert_true" if expected else "assert_false"
            return [f"{fn}({call_text});"]
        return [f"assert_eq({call_text}, {literal(expected)});"]

    # -- tasks

    def _generate(self, rng, secs, temperature):
        try:
            program = self._program(secs.get("SOURCE CODE", ""))
        except ParseError:
            return ""
        focal = [m.group(1) for m in re.finditer(r"^(\w+)", secs.get("FOCAL METHODS", ""), re.M)]
        focal = [f for f in focal if f in {g.name for g in program.functions}]
        if not focal:
            return ""
        names = {f.name for f in program.functions}
        helper = None
        parts = []
        if rng.random() < self.helper_rate:
            helper = "check_value"
            while helper in names:
                helper += "_"
            parts.append(f"fn {helper}(actual, expected) {{\n"
                         f"    assert_eq(actual, expected);\n}}\n")
        n_tests = rng.randint(1, 1 + round(3 * temperature))
        for k in range(n_tests):
            fn = rng.choice(focal)
            lines = []
            for j in range(rng.randint(1, 3)):
                sample = self._sample_call(rng, program, fn, temperature)
                if sample is None:
                    continue
                args, value = sample
                target = _typo(fn, rng) if rng.random() < self.typo_rate else fn
                call = f"{target}({', '.join(literal(a) for a in args)})"
                if rng.random() < 0.3:
                    lines.append(f"let r{j} = {call};")
                    call = f"r{j}"
                lines += self._assertion(rng, call, value, helper)
            if lines:
                body = "".join(f"    {ln}\n" for ln in lines)
                parts.append(f"test test_{fn}_{k}() {{\n{body}}}\n")
        return self._finish(rng, "\n".join(parts))

    def _repair(self, rng, secs):
        suite_text = secs.get("TEST SUITE", "")
        if self.fail_repairs:
            return suite_text
        try:
            program = self._program(secs.get("SOURCE CODE", ""))
            decls = parse_decls(suite_text, "<prompt>", allow_tests=True, instrument=False)
        except ParseError:
            return suite_text
        helpers = [d for d in decls if not d.is_test]
        out = list(helpers)
        for d in decls:
            if not d.is_test:
                continue
            if rng.random() < self.repair_success:
                body = self._recompute(program, helpers, d.body)
                if not body:
                    continue
                d = replace(d, body=body)
            out.append(d)
        return self._finish(rng, format_unit(out))

    def _probe(self, program, helpers, stmts):
        """Run ``stmts`` as a function body; ``(status, value)``."""
        probe = FunctionDecl("_probe_value", (), tuple(stmts))
        try:
            table = function_table(program, lower_functions([*helpers, probe]))
        except Exception:  # a helper shadows a program function
            return "error", None
        status, value, _msg = get_kernel().call_value(
            table, "_probe_value", [], self.step_budget, MAX_CALL_DEPTH)
        return status, value

    def _recompute(self, program, helpers, body):
        """Keep what runs; rewrite expectations to the observed values."""
        kept = []
        for s in body:
            call = s.expr if isinstance(s, ExprStmt) and isinstance(s.expr, Call) else None
            if call is not None and call.args and (
                    call.name in ("assert_eq", "assert_true", "assert_false")
                    or call.name in {h.name for h in helpers}):
                status, value = self._probe(program, helpers, kept + [Return(call.args[0])])
                if status != PASS or value is None:
                    continue
                if call.name == "assert_eq" or call.name not in ("assert_true", "assert_false"):
                    new = Call("assert_eq", (call.args[0], _lit_node(value)))
                elif isinstance(value, bool):
                    new = Call("assert_true" if value else "assert_false", (call.args[0],))
                else:
                    continue
                kept.append(ExprStmt(new))
                continue
            status, _ = self._probe(program, helpers, kept + [s])
            if status == PASS:
                kept.append(s)
        return tuple(kept)

    def _enhance(self, rng, secs, temperature):
        try:
            program = self._program(secs.get("SOURCE CODE", ""))
        except ParseError:
            return ""
        targets = set()
        for ln in secs.get("COVERAGE REPORT", "").split("\n"):
            m = _MISSED_LINE.match(ln.strip())
            if m:
                targets.add(("line", m.group(1), int(m.group(2))))
            m = _MISSED_BRANCH.match(ln.strip())
            if m:
                targets.add(("arm", m.group(1), int(m.group(2)), m.group(3)))
        focal = [f.name for f in program.functions if f.is_focal]
        if not targets or not focal:
            return ""
        branch_at = {bid: (program.branch_owner[bid], line)
                     for bid, (line, _n) in program.branch_index.items()}
        tests = []
        for _ in range(60):
            owners = sorted({t[1] for t in targets if t[1] in focal})
            pool = owners if owners and rng.random() < 0.7 else focal
            fn = rng.choice(pool)
            sample = self._sample_call(rng, program, fn, temperature, tries=1)
            if sample is None:
                continue
            args, value = sample
            call = f"{fn}({', '.join(literal(a) for a in args)})"
            hit = self._covered(program, call, branch_at) & targets
            if not hit:
                continue
            targets -= hit
            lines = "".join(f"    {ln}\n" for ln in self._assertion(rng, call, value))
            tests.append(f"test {fn}_enhanced_{len(tests)}() {{\n{lines}}}\n")
            if len(tests) == 4 or not targets:
                break
        return self._finish(rng, "\n".join(tests))

    def _covered(self, program, call_text, branch_at):
        decl = parse_decls(f"test _probe_cov() {{ {call_text}; }}", "<probe>",
                           allow_tests=True, instrument=False)[0]
        table = function_table(program, lower_functions([decl]))
        cov = execute(program, table, "_probe_cov", self.step_budget).coverage
        items = {("line", fn, line) for fn, line in cov.executed_lines}
        items |= {("arm", *branch_at[bid], arm) for bid, arm in cov.branch_outcomes}
        return items

    def _mutate(self, rng, secs, temperature):
        try:
            program = self._program(secs.get("SOURCE CODE", ""))
            decls = parse_decls(secs.get("TEST METHOD", ""), "<prompt>",
                                allow_tests=True, instrument=False)
        except ParseError:
            return ""
        tests = [d for d in decls if d.is_test]
        focal = [f.name for f in program.functions if f.is_focal]
        if not tests or not focal:
            return ""
        method = tests[0]
        extra = []
        for _ in range(rng.randint(1, 5)):
            fn = rng.choice(focal)
            sample = self._sample_call(rng, program, fn, temperature)
            if sample is None:
                continue
            args, value = sample
            call = f"{fn}({', '.join(literal(a) for a in args)})"
            extra += self._assertion(rng, call, value)
        text = format_function(method).rstrip()
        assert text.endswith("}")
        added = "".join(f"    {ln}\n" for ln in extra)
        return self._finish(rng, text[:-1] + added + "}\n")


def _lit_node(value):
    if isinstance(value, bool):
        return BoolLit(value)
    if isinstance(value, int):
        return IntLit(value)
    return StrLit(value)
