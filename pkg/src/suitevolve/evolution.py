"""Genetic refinement of test suites."""

from __future__ import annotations

import functools
import itertools
import logging
import math
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

from .llm.agents import MUTATOR_TEMPERATURE
from .llm.gateway import CompletionRequest, LLMError
from .llm.mock import strip_fences
from .llm.templates import get_template, render
from .minilang.coverage import CoverageReport
from .minilang.errors import ParseError, UsageError
from .minilang.interp import DEFAULT_STEP_BUDGET, MAX_CALL_DEPTH, PASS, function_table, get_kernel
from .minilang.lower import lower_functions
from .minilang.parser import parse_decls
from .minilang.printer import format_function, format_unit
from .minilang.program import Program
from .mutation import enumerate_mutants
from .suite import FitnessScore, TestMethod, TestSuite, _combine, count_assertions, size_of

log = logging.getLogger(__name__)

PERFECT = 100.0


@dataclass(frozen=True)
class GaParams:
    crossover_probability: float = 0.8
    time_budget_seconds: float = 300.0
    perfect_fitness: float = PERFECT
    selection_pressure: float = 1.5
    population_size: int = 25
    rng_seed: int = 0
    max_generations: Optional[int] = None  # None: bounded by the time budget only
    mutation_temperature: float = MUTATOR_TEMPERATURE
    disable_mutation: bool = False

    def __post_init__(self):
        if not 0.0 <= self.crossover_probability <= 1.0:
            raise UsageError("crossover_probability must lie in [0, 1]")
        if self.perfect_fitness != PERFECT:
            raise UsageError("perfect_fitness is fixed at 100")
        if not 1.0 < self.selection_pressure <= 2.0:
            raise UsageError("selection pressure must lie in (1, 2]")
        if self.population_size < 2:
            raise UsageError("population_size must be at least 2")


# ------------------------------------------------------------------ fitness


@dataclass(frozen=True)
class MethodResult:
    passed: bool
    sids: frozenset
    arms: frozenset
    killed: frozenset  # mutant ids


class FitnessEvaluator:
    """Computes :class:`FitnessScore` values with two cache levels.

    A method's verdict, coverage and kill set depend only on its body and
    the helpers it can reach, so they are cached under that text; suite
    scores are cached under ``(program key, suite content hash)``.
    """

    def __init__(self, program: Program, step_budget: int = DEFAULT_STEP_BUDGET,
                 kernel=None, mutants=None):
        self.program = program
        self.step_budget = step_budget
        self.kernel = kernel or get_kernel()
        self.mutants = enumerate_mutants(program, True) if mutants is None else list(mutants)
        self._methods = {}
        self._suites = {}
        self._lock = threading.Lock()
        self.suite_evaluations = 0
        self.method_evaluations = 0

    def _key(self, suite, method):
        helpers = suite.helper_closure(method.body)
        return ("\n".join(format_function(h) for h in helpers), method.body_text), helpers

    def method_result(self, suite: TestSuite, method: TestMethod) -> MethodResult:
        key, helpers = self._key(suite, method)
        with self._lock:
            hit = self._methods.get(key)
        if hit is not None:
            return hit
        result = self._run_method(helpers, method)
        with self._lock:
            self._methods[key] = result
            self.method_evaluations += 1
        return result

    def _run_method(self, helpers, method):
        code = lower_functions([*helpers, method.decl])
        try:
            table = function_table(self.program, code)
        except UsageError:
            return MethodResult(False, frozenset(), frozenset(), frozenset())
        status, _msg, _fr, _steps, sids, arms = self.kernel.execute(
            table, method.name, self.step_budget, MAX_CALL_DEPTH)
        if status != PASS:
            return MethodResult(False, frozenset(sids), frozenset(arms), frozenset())
        killed = []
        for m in self.mutants:
            mtable = function_table(m.program, code)
            if self.kernel.execute(mtable, method.name, self.step_budget, MAX_CALL_DEPTH)[0] != PASS:
                killed.append(m.mutant_id)
        return MethodResult(True, frozenset(sids), frozenset(arms), frozenset(killed))

    def evaluate(self, suite: TestSuite) -> FitnessScore:
        key = (self.program.key, suite.content_hash)
        with self._lock:
            hit = self._suites.get(key)
        if hit is not None:
            return hit
        sids, arms, killed = set(), set(), set()
        for m in suite.methods:
            r = self.method_result(suite, m)
            if r.passed:
                sids |= r.sids
                arms |= r.arms
                killed |= r.killed
        cov = CoverageReport.from_raw(self.program, sids, arms)
        msct = 100.0 * len(killed) / len(self.mutants) if self.mutants else 100.0
        score = FitnessScore(cov.line_percent, cov.branch_percent, msct)
        with self._lock:
            self._suites[key] = score
            self.suite_evaluations += 1
        return score

    def passes(self, suite: TestSuite, method: TestMethod) -> bool:
        return self.method_result(suite, method).passed


def evaluate_fitness(suite: TestSuite, program: Program,
                     evaluator: Optional[FitnessEvaluator] = None) -> FitnessScore:
    """``(LCCT, BCCT, MSCT)`` of the passing methods of ``suite``."""
    if evaluator is None or evaluator.program is not program:
        evaluator = FitnessEvaluator(program)
    return evaluator.evaluate(suite)


# ---------------------------------------------------------------- selection


def selection_probabilities(n: int, s: float = 1.5) -> List[float]:
    """Linear ranking: ``p(r) = (s - (2s - 2)(r - 1)/(n - 1)) / n`` for ranks 1..n."""
    if n < 1:
        raise UsageError("need at least one individual")
    if n == 1:
        return [1.0]
    return [(s - (2 * s - 2) * r / (n - 1)) / n for r in range(n)]


def rank_order(pool):
    """``(suite, score)`` pairs best first: scalar, then smaller size, then id."""
    return sorted(pool, key=_rank_key)


def _rank_key(pair):
    suite, score = pair
    return (-score.scalar, suite.size, suite.suite_id)


def ranked_select(pool, rng: random.Random, s: float = 1.5):
    """Two parents drawn by rank; parent 2 is redrawn once if it repeats parent 1."""
    if len(pool) < 2:
        raise UsageError("ranked selection needs at least two individuals")
    ranked = _ranked_cached(pool)
    cum = _cumulative(len(ranked), s)
    idx = range(len(ranked))
    i = rng.choices(idx, cum_weights=cum)[0]
    j = rng.choices(idx, cum_weights=cum)[0]
    if j == i:
        j = rng.choices(idx, cum_weights=cum)[0]
    return ranked[i][0], ranked[j][0]


_RANK_CACHE = {}


def _ranked_cached(pool):
    # Selection re-ranks the same population many times per generation. The
    # cached list holds references to every keyed object, so ids stay unique.
    key = tuple(id(x) for pair in pool for x in pair)
    ranked = _RANK_CACHE.get(key)
    if ranked is None:
        ranked = rank_order(pool)
        if len(_RANK_CACHE) >= 8:
            _RANK_CACHE.clear()
        _RANK_CACHE[key] = ranked
    return ranked


@functools.lru_cache(maxsize=64)
def _cumulative(n, s):
    return list(itertools.accumulate(selection_probabilities(n, s)))


# ---------------------------------------------------------------- crossover


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _pick(parent: TestSuite, k: int, rng):
    chosen = sorted(rng.sample(range(len(parent.methods)), k))
    methods = [parent.methods[i] for i in chosen]
    bodies = tuple(s for m in methods for s in m.body)
    return methods, parent.helper_closure(bodies)


def _child(p1, k1, p2, k2, rng):
    m1, h1 = _pick(p1, k1, rng)
    m2, h2 = _pick(p2, k2, rng)
    methods, helpers = _combine(m1, h1, m2, h2, dedupe=False)
    return TestSuite.create(methods, helpers, "crossover", None, p1.filename)


def crossover(p1: TestSuite, p2: TestSuite, rng: random.Random) -> Tuple[TestSuite, TestSuite]:
    """Offspring A takes ~80% of p1's methods and ~20% of p2's; B the reverse."""
    n1, n2 = len(p1.methods), len(p2.methods)
    a = _child(p1, round_half_up(0.8 * n1), p2, round_half_up(0.2 * n2), rng)
    b = _child(p1, round_half_up(0.2 * n1), p2, round_half_up(0.8 * n2), rng)
    return a, b


# ----------------------------------------------------------------- mutation


def _is_subsequence(original, new) -> bool:
    it = iter(new)
    return all(any(s == t for t in it) for s in original)


def _mutate_method(suite, method, program, backend, evaluator, temperature, seed):
    helpers = suite.helper_closure(method.body)
    user = render("mutator", {
        "test_method": format_function(method.decl),
        "source_code": program.source,
        "helpers": format_unit(helpers),
    })
    request = CompletionRequest("mutator", get_template("mutator").instructions, user,
                                temperature, seed=seed)
    try:
        reply = backend.complete(request).text
        decls = parse_decls(strip_fences(reply), "<mutator>", allow_tests=True, instrument=False)
    except LLMError as exc:
        log.info("mutator unavailable, keeping %s: %s", method.name, exc)
        return None
    except ParseError as exc:
        log.debug("mutator reply for %s rejected: %s", method.name, exc)
        return None
    tests = [d for d in decls if d.is_test]
    if len(tests) != 1:
        return None
    body = tests[0].body
    added = count_assertions(body) - method.assertion_count
    if not 1 <= added <= 5 or not _is_subsequence(method.body, body):
        return None
    candidate = TestMethod(method.name, body)
    probe = suite.derive([candidate])
    if not evaluator.passes(probe, probe.methods[0]):
        return None
    return candidate


def mutate_with_log(suite: TestSuite, program: Program, backend, rng: random.Random, *,
                    evaluator: Optional[FitnessEvaluator] = None,
                    temperature: float = MUTATOR_TEMPERATURE):
    """Like :func:`mutate`; also returns the names of the methods that were attempted."""
    n = len(suite.methods)
    if n == 0:
        return suite, []
    evaluator = evaluator or FitnessEvaluator(program)
    p = 1.0 / n
    methods = list(suite.methods)
    attempted, changed = [], False
    for i, m in enumerate(suite.methods):
        if rng.random() >= p:
            continue
        seed = rng.getrandbits(32)
        attempted.append(m.name)
        new = _mutate_method(suite, m, program, backend, evaluator, temperature, seed)
        if new is not None:
            methods[i] = new
            changed = True
    if not changed:
        return suite, attempted
    return TestSuite.create(methods, suite.helpers, "mutated", None, suite.filename), attempted


def mutate(suite: TestSuite, program: Program, backend, rng: random.Random, *,
           evaluator: Optional[FitnessEvaluator] = None,
           temperature: float = MUTATOR_TEMPERATURE) -> TestSuite:
    """Each method, with probability 1/N, gets 1-5 extra assertions from the mutator."""
    return mutate_with_log(suite, program, backend, rng, evaluator=evaluator,
                           temperature=temperature)[0]


# ---------------------------------------------------------------- evolution


@dataclass
class Generation:
    index: int
    elite_pool: List[TestSuite]
    best: Tuple[str, FitnessScore]
    mean_scalar: float
    elapsed: float

    def record(self) -> dict:
        return {"generation": self.index, "best_suite": self.best[0],
                "best_scalar": self.best[1].scalar, "mean_scalar": self.mean_scalar,
                "elapsed_seconds": round(self.elapsed, 3)}


@dataclass
class EvolutionResult:
    best: TestSuite
    score: FitnessScore
    best_initial: TestSuite
    initial_score: FitnessScore
    generations: List[Generation] = field(default_factory=list)
    population: List[TestSuite] = field(default_factory=list)
    early_exit: bool = False
    mutation_attempts: int = 0
    mutation_accepted: int = 0


def _combined_size(a, b):
    sa, sb = size_of(a), size_of(b)
    return (sa[0] + sb[0], sa[1] + sb[1])


def accept_offspring(offspring, parents) -> bool:
    """Offspring win if their best scalar is higher, or equal with no larger combined size."""
    (o1, fo1), (o2, fo2) = offspring
    (p1, fp1), (p2, fp2) = parents
    best_o, best_p = max(fo1.scalar, fo2.scalar), max(fp1.scalar, fp2.scalar)
    if best_o != best_p:
        return best_o > best_p
    return _combined_size(o1, o2) <= _combined_size(p1, p2)


def run_evolution(initial, program: Program, params: GaParams, backend, *,
                  evaluator: Optional[FitnessEvaluator] = None,
                  clock: Callable[[], float] = time.monotonic,
                  on_generation: Optional[Callable[[Generation], None]] = None) -> EvolutionResult:
    """The GA loop; see :func:`evolve`."""
    initial = list(initial)
    if len(initial) != params.population_size:
        raise UsageError(f"expected {params.population_size} initial suites, got {len(initial)}")
    ev = evaluator or FitnessEvaluator(program)
    rng = random.Random(params.rng_seed)
    start = clock()
    pop = [(s, ev.evaluate(s)) for s in initial]
    best_initial = rank_order(pop)[0]
    result = EvolutionResult(best_initial[0], best_initial[1], best_initial[0], best_initial[1])

    def finish(pairs, early):
        top = rank_order(pairs)[0]
        result.best, result.score, result.early_exit = top[0], top[1], early
        result.population = [s for s, _ in pairs]
        return result

    if best_initial[1].scalar >= params.perfect_fitness:
        return finish(pop, True)

    def mutate_one(suite):
        if params.disable_mutation:
            return suite
        new, tried = mutate_with_log(suite, program, backend, rng, evaluator=ev,
                                     temperature=params.mutation_temperature)
        result.mutation_attempts += len(tried)
        result.mutation_accepted += new is not suite
        return new

    n = params.population_size
    gen = 0
    while clock() - start < params.time_budget_seconds and (
            params.max_generations is None or gen < params.max_generations):
        pool = [rank_order(pop)[0]]  # elitism: the incumbent best always survives
        while len(pool) < n:
            if clock() - start >= params.time_budget_seconds:
                have = {s.content_hash for s, _ in pool}
                rest = [p for p in rank_order(pop) if p[0].content_hash not in have]
                rest += rank_order(pop)
                pool += rest[: n - len(pool)]
                break
            p1, p2 = ranked_select(pop, rng, params.selection_pressure)
            if rng.random() < params.crossover_probability:
                o1, o2 = crossover(p1, p2, rng)
            else:
                o1, o2 = p1, p2
            o1, o2 = mutate_one(o1), mutate_one(o2)
            offspring = [(o1, ev.evaluate(o1)), (o2, ev.evaluate(o2))]
            parents = [(p1, ev.evaluate(p1)), (p2, ev.evaluate(p2))]
            chosen = offspring if accept_offspring(offspring, parents) else parents
            if len(pool) == n - 1:
                chosen = rank_order(chosen)[:1]
            pool += chosen
            if any(f.scalar >= params.perfect_fitness for _s, f in chosen):
                return finish(pool, True)
        pop = pool
        gen += 1
        top = rank_order(pop)[0]
        g = Generation(gen, [s for s, _ in pop], (top[0].suite_id, top[1]),
                       sum(f.scalar for _s, f in pop) / len(pop), clock() - start)
        result.generations.append(g)
        if on_generation is not None:
            on_generation(g)
    if best_initial[0].content_hash not in {s.content_hash for s, _ in pop}:
        pop.append(best_initial)
    return finish(pop, False)


def evolve(initial, program: Program, params: GaParams, backend, **kw) -> TestSuite:
    """Refine ``initial`` and return the highest-fitness suite found."""
    return run_evolution(initial, program, params, backend, **kw).best
