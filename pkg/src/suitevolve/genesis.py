"""Initial population: diverse generation, repair, and coverage enhancement."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

from .llm.agents import AGENTS, AgentConfig
from .llm.gateway import AuthError, CompletionRequest, LLMError
from .llm.mock import strip_fences
from .llm.templates import get_template, render
from .minilang.coverage import CoverageReport, merge_coverage
from .minilang.errors import ParseError, UsageError
from .minilang.interp import DEFAULT_STEP_BUDGET, run_test_method
from .minilang.nodes import Assign, Call, If, Let, Return, Var, While, iter_exprs, iter_stmts, stmt_exprs
from .minilang.parser import BUILTINS, parse_decls
from .minilang.printer import format_unit
from .minilang.program import Program, parse
from .seeding import mix
from .suite import TestMethod, TestSuite, merge_suites, prune_failing, rename_calls, split_methods

log = logging.getLogger(__name__)

MAX_REPAIR_ROUNDS = 4

STATEMENT_REMOVED = "statement_removed"
IDENTIFIER_STUBBED = "identifier_stubbed"
LLM_REPAIR = "llm_repair"


@dataclass
class RepairState:
    round: int = 0
    last_trace: str = ""
    fixes_applied: List[Tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class PopulationSpec:
    strategies: Tuple[AgentConfig, ...] = AGENTS
    samples_per_strategy: int = 5

    def __post_init__(self):
        if self.population_size < 2:
            raise UsageError("population size must be at least 2")

    @property
    def population_size(self) -> int:
        return len(self.strategies) * self.samples_per_strategy


@dataclass
class GenesisRecord:
    """What happened in one (strategy, sample) pipeline."""

    provenance: str
    agent: AgentConfig
    sample: int
    suite: TestSuite
    repairs: List[RepairState] = field(default_factory=list)
    error: Optional[str] = None


# ------------------------------------------------------------- preprocessing


def _drop_dead(body):
    out = []
    for s in body:
        if isinstance(s, If):
            s = replace(s, then=_drop_dead(s.then),
                        orelse=None if s.orelse is None else _drop_dead(s.orelse))
        elif isinstance(s, While):
            s = replace(s, body=_drop_dead(s.body))
        out.append(s)
        if isinstance(s, Return):
            break
    return tuple(out)


def preprocess_source(program_source: str, path: str = "<input>") -> str:
    """Strip comments and statements that follow a ``return`` in the same block.

    The result is the canonical printed form, so line numbers refer to it.
    """
    decls = parse_decls(program_source, path)
    return format_unit([replace(d, body=_drop_dead(d.body)) for d in decls])


def prepare_program(program_source: str, path: str = "<input>") -> Program:
    """Parse the preprocessed form; the pipeline works on this program."""
    return parse(preprocess_source(program_source, path), path)


# ------------------------------------------------------------------- helpers


def focal_listing(program: Program) -> str:
    return "\n".join(f"{f.name}({', '.join(f.params)})"
                     for f in program.functions if f.is_focal)


def parse_reply(text: str, provenance: str, filename: str) -> TestSuite:
    """Turn a model reply into a suite; raises ParseError (or UsageError)."""
    return split_methods(strip_fences(text), filename, provenance)


def run_all(program, suite, step_budget=DEFAULT_STEP_BUDGET):
    try:
        return {name: run_test_method(program, suite, name, step_budget)
                for name in suite.method_names}
    except UsageError:
        return None  # a helper shadows a program function


def coverage_text(program, suite, outcomes) -> str:
    """Prompt-visible coverage report: metrics, then one line per missed item."""
    reports = [o.coverage for o in (outcomes or {}).values() if o.passed]
    cov = merge_coverage(reports) if reports else CoverageReport.empty(program)
    lines = [f"Line coverage: {cov.line_percent:.1f}%",
             f"Branch coverage: {cov.branch_percent:.1f}%"]
    lines += missed_items(cov)
    return "\n".join(lines)


def missed_items(cov) -> List[str]:
    """``MISSED LINE fn:line`` / ``MISSED BRANCH fn:line arm=..`` sorted by function, line."""
    items = [((fn, line, 0, ""), f"MISSED LINE {fn}:{line}") for fn, line in cov.missed_lines()]
    items += [((fn, line, 1, arm != "then"), f"MISSED BRANCH {fn}:{line} arm={arm}")
              for fn, line, arm in cov.missed_arms()]
    return [text for _key, text in sorted(items, key=lambda kv: kv[0])]


def _edit1(a: str, b: str) -> bool:
    """True when ``a`` and ``b`` are exactly one insertion, deletion or substitution apart."""
    if a == b or abs(len(a) - len(b)) > 1:
        return False
    if len(a) == len(b):
        return sum(x != y for x, y in zip(a, b)) == 1
    if len(a) > len(b):
        a, b = b, a
    i = 0
    while i < len(a) and a[i] == b[i]:
        i += 1
    return a[i:] == b[i + 1:]


def _reads(stmt):
    names = set()
    for s in iter_stmts((stmt,)):
        for top in stmt_exprs(s):
            for e in iter_exprs(top):
                if isinstance(e, Var):
                    names.add(e.name)
    return names


def _defines(stmt):
    return {s.name for s in iter_stmts((stmt,)) if isinstance(s, (Let, Assign))}


def _remove_failing_statement(body, line):
    """Rule 1: drop the top-level statement at ``line`` and its dependents."""
    idx = None
    for i, s in enumerate(body):
        if s.line <= line:
            idx = i
    if idx is None:
        return None
    tainted = _defines(body[idx])
    kept = list(body[:idx])
    for s in body[idx + 1:]:
        if _reads(s) & tainted:
            tainted |= _defines(s)
            continue
        kept.append(s)
    return tuple(kept), body[idx]


_UNDEFINED_FN = re.compile(r"^undefined function (\w+)$")


def programmatic_fix(suite, program, outcomes, state):
    """Apply one deterministic fix to the first fixable failing method.

    Returns the new suite, or None when no rule applies.
    """
    known = [f.name for f in program.functions] + suite.helper_names
    for m in suite.methods:
        o = outcomes[m.name]
        if o.passed or not o.frames:
            continue
        top = o.frames[0]
        # rule 2: near-miss call target
        hit = _UNDEFINED_FN.match(o.message)
        if hit:
            bad = hit.group(1)
            cands = sorted(n for n in known if _edit1(bad, n) and n not in BUILTINS)
            if cands:
                mapping = {bad: cands[0]}
                methods = [TestMethod(x.name, rename_calls(x.body, mapping)) for x in suite.methods]
                helpers = [replace(h, body=rename_calls(h.body, mapping)) for h in suite.helpers]
                state.fixes_applied.append(
                    (IDENTIFIER_STUBBED, f"{top.file}:{top.line}:{top.col} {bad}->{cands[0]}"))
                return suite.derive(methods, helpers)
        # rule 1: the failure sits in the test method's own statements
        if top.function == m.name:
            res = _remove_failing_statement(m.body, top.line)
            if res is None:
                continue
            body, _removed = res
            state.fixes_applied.append((STATEMENT_REMOVED, f"{top.file}:{top.line}:{top.col}"))
            methods = [x for x in suite.methods if x.name != m.name]
            if body:
                pos = suite.method_names.index(m.name)
                methods.insert(pos, TestMethod(m.name, body))
            return suite.derive(methods)
    return None


def _failing(outcomes):
    return [n for n, o in outcomes.items() if not o.passed]


def _traces(outcomes):
    return "\n".join(o.report for o in outcomes.values() if not o.passed)


# ------------------------------------------------------------------ repair


def repair_loop(suite: TestSuite, program: Program, backend, *, agent: AgentConfig = AGENTS[0],
                seed: int = 0, step_budget: int = DEFAULT_STEP_BUDGET):
    """Make every method pass: programmatic fixes first, then up to 4 LLM rounds.

    Residual failures are pruned. Returns ``(suite, RepairState)``.
    """
    state = RepairState()
    outcomes = run_all(program, suite, step_budget)
    if outcomes is None:  # unusable helpers: nothing can run
        return suite.derive([], []), state
    while _failing(outcomes):
        while _failing(outcomes):
            fixed = programmatic_fix(suite, program, outcomes, state)
            if fixed is None:
                break
            suite = fixed
            outcomes = run_all(program, suite, step_budget)
            if outcomes is None:
                return suite.derive([], []), state
        if not _failing(outcomes) or state.round >= MAX_REPAIR_ROUNDS:
            break
        state.last_trace = _traces(outcomes)
        user = render("repair", {"stacktrace": state.last_trace, "test_suite": suite.source,
                                 "source_code": program.source})
        request = CompletionRequest("repair", get_template(agent.system_prompt).instructions,
                                    user, agent.temperature,
                                    seed=mix(seed, "repair", state.round))
        state.round += 1
        try:
            reply = backend.complete(request).text
            candidate = parse_reply(reply, suite.provenance, suite.filename)
        except (LLMError, ParseError, UsageError) as exc:
            log.info("repair round %d of %s failed: %s", state.round, suite.provenance, exc)
            continue
        if not candidate.methods:
            log.info("repair round %d of %s returned no tests", state.round, suite.provenance)
            continue
        new_outcomes = run_all(program, candidate, step_budget)
        if new_outcomes is None:
            continue
        state.fixes_applied.append((LLM_REPAIR, f"round {state.round}"))
        suite = TestSuite.create(candidate.methods, candidate.helpers, suite.provenance,
                                 None, suite.filename)
        outcomes = new_outcomes
    if _failing(outcomes):
        state.last_trace = _traces(outcomes)
    return prune_failing(suite, outcomes), state


# ------------------------------------------------------------- enhancement


def enhance_coverage(suite: TestSuite, program: Program, agent: AgentConfig, backend, *,
                     seed: int = 0, step_budget: int = DEFAULT_STEP_BUDGET,
                     repair_log: Optional[list] = None) -> TestSuite:
    """Ask for complementary tests aimed at missed lines and arms.

    Returns only the new tests (already repaired); the caller merges.
    """
    empty = TestSuite.create([], [], suite.provenance, None, suite.filename)
    outcomes = run_all(program, suite, step_budget) or {}
    report = coverage_text(program, suite, outcomes)
    if "MISSED " not in report:
        return empty
    user = render("coverage_enhance", {
        "coverage_report": report,
        "focal_methods": focal_listing(program),
        "source_code": program.source,
        "test_suite": suite.source,
    })
    request = CompletionRequest("coverage_enhance", get_template("coverage_enhance").instructions,
                                user, agent.temperature, seed=mix(seed, "enhance"))
    try:
        extra = parse_reply(backend.complete(request).text, suite.provenance, suite.filename)
    except (LLMError, ParseError, UsageError) as exc:
        log.info("coverage enhancement for %s failed: %s", suite.provenance, exc)
        return empty
    extra, state = repair_loop(extra, program, backend, agent=agent,
                               seed=mix(seed, "enhance-repair"), step_budget=step_budget)
    if repair_log is not None:
        repair_log.append(state)
    return extra


# --------------------------------------------------------------- population


def _pipeline(program, agent, sample, backend, seed, step_budget):
    provenance = f"{agent.agent_id}-{sample}"
    pseed = mix(seed, agent.agent_id, sample)
    filename = f"{provenance}.test.mini"
    record = GenesisRecord(provenance, agent, sample,
                           TestSuite.create([], [], provenance, provenance, filename))
    try:
        user = render(agent.system_prompt, {"focal_methods": focal_listing(program),
                                            "source_code": program.source})
        request = CompletionRequest(agent.system_prompt,
                                    get_template(agent.system_prompt).instructions,
                                    user, agent.temperature, seed=pseed)
        reply = backend.complete(request).text
        suite = parse_reply(reply, provenance, filename)
    except AuthError:
        raise
    except (LLMError, ParseError, UsageError) as exc:
        log.info("generation %s failed: %s", provenance, exc)
        record.error = str(exc)
        return record
    suite, state = repair_loop(suite, program, backend, agent=agent, seed=pseed,
                               step_budget=step_budget)
    record.repairs.append(state)
    extra = enhance_coverage(suite, program, agent, backend, seed=pseed,
                             step_budget=step_budget, repair_log=record.repairs)
    merged = merge_suites(suite, extra, provenance=provenance)
    record.suite = TestSuite.create(merged.methods, merged.helpers, provenance, provenance,
                                    filename)
    return record


def generate_population(spec: PopulationSpec, program: Program, backend, *, seed: int = 0,
                        workers: int = 4, step_budget: int = DEFAULT_STEP_BUDGET):
    """Run every (strategy, sample) pipeline; returns one :class:`GenesisRecord` each."""
    jobs = [(a, i) for a in spec.strategies for i in range(spec.samples_per_strategy)]
    if workers <= 1:
        return [_pipeline(program, a, i, backend, seed, step_budget) for a, i in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_pipeline, program, a, i, backend, seed, step_budget)
                   for a, i in jobs]
        return [f.result() for f in futures]


def generate_initial(spec: PopulationSpec, program: Program, backend, *, seed: int = 0,
                     workers: int = 4, step_budget: int = DEFAULT_STEP_BUDGET):
    """The initial GA population: ``spec.population_size`` suites."""
    return [r.suite for r in generate_population(spec, program, backend, seed=seed,
                                                  workers=workers, step_budget=step_budget)]
