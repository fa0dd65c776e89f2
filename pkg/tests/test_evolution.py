import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from conftest import load_fixture
from oracles import oracle_fitness
from suitevolve import fixtures
from suitevolve.evolution import (
    FitnessEvaluator, GaParams, accept_offspring, crossover, evaluate_fitness, evolve,
    mutate, mutate_with_log, rank_order, ranked_select, round_half_up, run_evolution,
    selection_probabilities,
)
from suitevolve.genesis import PopulationSpec, generate_initial, prepare_program
from suitevolve.llm import CompletionResponse, MockBackend
from suitevolve.minilang import UsageError, parse
from suitevolve.suite import FitnessScore, merge_suites, size_of, split_methods


def suite_of(n, prefix="t", value=1):
    return split_methods("\n".join(f"test {prefix}{i}() {{ assert_eq({value + i}, {value + i}); }}"
                                   for i in range(n)))


class Echo:
    """Mutator stand-in that returns the method unchanged (always rejected)."""

    name = "echo"

    def __init__(self):
        self.calls = 0

    def complete(self, request):
        from suitevolve.llm import sections
        self.calls += 1
        return CompletionResponse(sections(request.user)["TEST METHOD"], "echo", 0.0,
                                  request.temperature)


class AddAssert:
    name = "add"

    def __init__(self, line):
        self.line = line

    def complete(self, request):
        from suitevolve.llm import sections
        text = sections(request.user)["TEST METHOD"].rstrip()
        assert text.endswith("}")
        return CompletionResponse(text[:-1] + self.line + "\n}\n", "add", 0.0, request.temperature)


# ----------------------------------------------------------------- fitness

def test_fitness_examples():
    assert FitnessScore(lcct=100, bcct=100, msct=100).scalar == 100
    assert FitnessScore(lcct=100, bcct=50, msct=80).scalar == 75


@pytest.mark.parametrize("name", fixtures.NAMES)
def test_fitness_matches_oracle_and_manifest(name, manifest):
    program, suite = load_fixture(name)
    got = evaluate_fitness(suite, program)
    lcct, bcct, msct, scalar = oracle_fitness(program, suite)
    assert (got.lcct, got.bcct, got.msct) == (lcct, bcct, msct)
    assert got.scalar == pytest.approx(scalar, abs=1e-12)
    assert got.scalar == pytest.approx(manifest["fixtures"][name]["scalar"], abs=1e-9)


def test_empty_suite_scores_zero():
    program, _ = load_fixture("triangle")
    s = evaluate_fitness(split_methods(""), program)
    assert (s.lcct, s.bcct, s.msct, s.scalar) == (0, 0, 0, 0)


def test_failing_methods_contribute_nothing():
    program, suite = load_fixture("gcd")
    broken = merge_suites(suite, split_methods("test bad() { assert_eq(gcd(4, 6), 3); }"))
    assert evaluate_fitness(broken, program) == evaluate_fitness(suite, program)


def test_fitness_is_pure_and_cached():
    program, suite = load_fixture("leapyear")
    ev = FitnessEvaluator(program)
    a = ev.evaluate(suite)
    b = ev.evaluate(suite)
    assert a == b == FitnessEvaluator(program).evaluate(suite)
    assert ev.suite_evaluations == 1


# --------------------------------------------------------------- selection

def test_selection_probability_examples():
    assert selection_probabilities(3, 1.5) == pytest.approx([0.5, 1 / 3, 1 / 6])
    assert selection_probabilities(4, 1.0) == pytest.approx([0.25] * 4)
    for n in (2, 7, 25):
        assert sum(selection_probabilities(n, 1.7)) == pytest.approx(1.0)


def test_ranked_select_needs_two():
    program, suite = load_fixture("basics")
    with pytest.raises(UsageError):
        ranked_select([(suite, evaluate_fitness(suite, program))], random.Random(0))


def test_rank_order_ties_break_by_size_then_id():
    s = FitnessScore(50, 50, 50)
    small, big = suite_of(1, "a"), suite_of(3, "b")
    assert [p[0] for p in rank_order([(big, s), (small, s)])] == [small, big]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=2, max_size=10), st.floats(0.01, 100))
def test_selection_depends_on_rank_only(scalars, k):
    pool = [(suite_of(1, f"s{i}_"), FitnessScore(0, 0, v)) for i, v in enumerate(scalars)]
    scaled = [(s, FitnessScore(0, 0, f.msct * k)) for s, f in pool]
    ids = lambda p: [x[0].suite_id for x in rank_order(p)]
    if len(set(scalars)) == len(scalars) and len({v * k for v in scalars}) == len(scalars):
        assert ids(pool) == ids(scaled)


# --------------------------------------------------------------- crossover

def test_crossover_counts_10_by_10():
    p1, p2 = suite_of(10, "x", 1), suite_of(10, "y", 100)
    a, b = crossover(p1, p2, random.Random(0))
    count = lambda s, pre: sum(n.startswith(pre) for n in s.method_names)
    assert (count(a, "x"), count(a, "y")) == (8, 2)
    assert (count(b, "x"), count(b, "y")) == (2, 8)
    assert a.provenance == b.provenance == "crossover"


def test_crossover_counts_3_by_5():
    a, b = crossover(suite_of(3, "x"), suite_of(5, "y", 50), random.Random(1))
    assert len(a.methods) == 3  # round(2.4) + round(1.0)
    assert len(b.methods) == round_half_up(0.6) + round_half_up(4.0)


def test_crossover_empty_parents():
    a, b = crossover(split_methods(""), split_methods(""), random.Random(0))
    assert len(a.methods) == len(b.methods) == 0


def test_crossover_keeps_helper_closure():
    p1 = split_methods("fn h(v) { return v; }\n" + "\n".join(
        f"test a{i}() {{ assert_eq(h({i}), {i}); }}" for i in range(5)))
    p2 = split_methods("fn h(v) { return 0 - v; }\n" + "\n".join(
        f"test b{i}() {{ assert_eq(h({i}), {-i}); }}" for i in range(5)))
    program = parse("fn unused() { return 0; }")
    ev = FitnessEvaluator(program)
    for seed in range(20):
        for child in crossover(p1, p2, random.Random(seed)):
            assert all(ev.passes(child, m) for m in child.methods)


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.4, 2.5)] == [1, 2, 2, 3]


# ---------------------------------------------------------------- mutation

def test_single_method_always_attempted():
    program = parse("fn unused() { return 0; }")
    suite = suite_of(1)
    for seed in range(20):
        _s, tried = mutate_with_log(suite, program, Echo(), random.Random(seed))
        assert tried == ["t0"]


def test_mutation_accepts_added_assertion():
    program, _ = load_fixture("basics")
    suite = split_methods("test t() { assert_eq(max2(1, 2), 2); }")
    out = mutate(suite, program, AddAssert("    assert_eq(max2(5, 3), 5);"), random.Random(0))
    assert out.method("t").assertion_count == 2
    assert out.provenance == "mutated"


@pytest.mark.parametrize("line", [
    "    assert_eq(max2(5, 3), 3);",          # fails against the program
    "    let z = 1;",                         # no new assertion
    "    " + " ".join(["assert_true(true);"] * 6),  # more than five
])
def test_mutation_rejections_keep_original(line):
    program, _ = load_fixture("basics")
    suite = split_methods("test t() { assert_eq(max2(1, 2), 2); }")
    out = mutate(suite, program, AddAssert(line), random.Random(0))
    assert out is suite


def test_mutation_rejects_dropped_statements():
    class Rewrite:
        name = "rw"

        def complete(self, request):
            return CompletionResponse("test t() { assert_eq(max2(9, 1), 9); }", "rw", 0.0,
                                      request.temperature)
    program, _ = load_fixture("basics")
    suite = split_methods("test t() { assert_eq(max2(1, 2), 2); }")
    assert mutate(suite, program, Rewrite(), random.Random(0)) is suite


def test_mutation_rate_per_method():
    program = parse("fn unused() { return 0; }")
    suite = suite_of(4)
    rng = random.Random(3)
    hits = Counter()
    trials = 4000
    for _ in range(trials):
        _s, tried = mutate_with_log(suite, program, Echo(), rng)
        hits.update(tried)
    for name in suite.method_names:
        assert abs(hits[name] / trials - 0.25) < 0.03


# ------------------------------------------------------------------ evolve

def test_accept_rule():
    a, b = suite_of(1, "a"), suite_of(2, "b")
    hi, lo = FitnessScore(90, 90, 90), FitnessScore(80, 80, 80)
    assert accept_offspring([(a, hi), (a, lo)], [(b, lo), (b, lo)])
    assert not accept_offspring([(b, lo), (b, lo)], [(a, hi), (a, lo)])
    assert accept_offspring([(a, hi), (a, lo)], [(b, hi), (b, lo)])   # equal, shorter
    assert not accept_offspring([(b, hi), (b, lo)], [(a, hi), (a, lo)])  # equal, longer


def test_params_validation():
    with pytest.raises(UsageError):
        GaParams(crossover_probability=1.5)
    with pytest.raises(UsageError):
        GaParams(selection_pressure=2.5)
    with pytest.raises(UsageError):
        GaParams(perfect_fitness=90)


def perfect_suite():
    program = parse("fn id(x) { return x; }")
    good = split_methods("test t() { assert_eq(id(3), 3); }")
    assert evaluate_fitness(good, program).scalar == 100
    return program, good


def test_perfect_initial_returns_immediately():
    program, good = perfect_suite()
    result = run_evolution([split_methods(""), good], program,
                           GaParams(population_size=2), Echo())
    assert result.best is good and result.early_exit and result.generations == []


def test_zero_budget_returns_best_initial():
    program, suite = load_fixture("triangle")
    weaker = split_methods("test w() { assert_eq(classify(1, 1, 1), 1); }")
    best = evolve([weaker, suite], program, GaParams(population_size=2, time_budget_seconds=0),
                  Echo())
    assert best is suite


def test_initial_size_must_match():
    program, suite = load_fixture("triangle")
    with pytest.raises(UsageError):
        evolve([suite], program, GaParams(population_size=2), Echo())


def test_seeded_triangle_run_improves_and_is_monotone():
    program = prepare_program(fixtures.read("triangle"), "triangle.mini")
    backend = MockBackend(11)
    initial = generate_initial(PopulationSpec(samples_per_strategy=2), program, backend, seed=11)
    params = GaParams(population_size=10, rng_seed=11, time_budget_seconds=60,
                      max_generations=8)
    result = run_evolution(initial, program, params, backend)
    best = [g.best[1].scalar for g in result.generations]
    assert best == sorted(best)
    assert result.score.scalar >= result.initial_score.scalar
    for g in result.generations:
        assert len(g.elite_pool) == 10
    if not result.early_exit:
        assert any(s.content_hash == result.best_initial.content_hash for s in result.population)
    assert size_of(result.best)[0] > 0
