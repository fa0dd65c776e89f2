"""End-to-end orchestration and the run report."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional, Tuple

from .evolution import FitnessEvaluator, GaParams, rank_order, run_evolution
from .genesis import PopulationSpec, generate_population, prepare_program
from .llm.agents import AGENTS, agent
from .llm.gateway import API_KEY_ENV, Gateway, LLMError, RemoteBackend
from .llm.mock import MockBackend
from .minilang.errors import MiniLangError, ParseError, UsageError
from .minilang.interp import DEFAULT_STEP_BUDGET
from .minilang.program import parse_file
from .mutation import enumerate_mutants, execute_mutants, mutant_records
from .suite import split_methods

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ConfigError(MiniLangError):
    """Invalid run configuration; raised before any model call."""


@dataclass(frozen=True)
class RunConfig:
    program: str = ""
    backend: str = "mock"
    seed: Optional[int] = None
    endpoint: Optional[str] = None
    model: Optional[str] = None
    in_flight: int = 8
    max_retries: int = 3
    strategies: Tuple[str, ...] = tuple(a.agent_id for a in AGENTS)
    samples_per_strategy: int = 5
    crossover_probability: float = 0.8
    time_budget_seconds: float = 300.0
    selection_pressure: float = 1.5
    max_generations: Optional[int] = 10
    step_budget: int = DEFAULT_STEP_BUDGET
    workers: int = 4
    report: Optional[str] = None
    disable_ga: bool = False
    disable_temperature_diversity: bool = False
    disable_mutation: bool = False
    mock_wrong_rate: float = 0.1
    mock_fail_repairs: bool = False

    @classmethod
    def from_mapping(cls, data: dict, **overrides) -> "RunConfig":
        """Build from a config mapping; non-``None`` overrides win."""
        known = {f.name for f in fields(cls)}
        merged = {}
        for key, value in {**(data or {}), **{k: v for k, v in overrides.items()
                                              if v is not None}}.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            merged[key] = value
        if "strategies" in merged:
            merged["strategies"] = tuple(merged["strategies"])
        return cls(**merged)

    def validate(self):
        if self.backend not in ("mock", "remote"):
            raise ConfigError(f"backend must be 'mock' or 'remote', not {self.backend!r}")
        if self.backend == "mock" and self.seed is None:
            raise ConfigError("the mock backend requires a seed")
        if self.backend == "remote":
            if not self.endpoint or not self.model:
                raise ConfigError("the remote backend needs an endpoint and a model name")
            if not os.environ.get(API_KEY_ENV):
                raise ConfigError(f"the remote backend reads its key from ${API_KEY_ENV}")
        if not self.program or not os.path.isfile(self.program):
            raise ConfigError(f"program file not found: {self.program!r}")
        for a in self.strategies:
            try:
                agent(a)
            except KeyError as exc:
                raise ConfigError(str(exc)) from None
        if self.in_flight < 1 or self.max_retries < 0 or self.workers < 1 or self.step_budget < 1:
            raise ConfigError("in_flight, workers and step_budget must be positive; "
                              "max_retries must be non-negative")
        if self.samples_per_strategy < 1 or len(self.strategies) * self.samples_per_strategy < 2:
            raise ConfigError("population size must be at least 2")
        try:
            self.ga_params()
        except UsageError as exc:
            raise ConfigError(str(exc)) from None

    def population_spec(self) -> PopulationSpec:
        agents = [agent(a) for a in self.strategies]
        if self.disable_temperature_diversity:
            base = agent("A1")
            agents = [replace(base, agent_id=a.agent_id) for a in agents]
        return PopulationSpec(tuple(agents), self.samples_per_strategy)

    def ga_params(self) -> GaParams:
        return GaParams(
            crossover_probability=self.crossover_probability,
            time_budget_seconds=self.time_budget_seconds,
            selection_pressure=self.selection_pressure,
            population_size=len(self.strategies) * self.samples_per_strategy,
            rng_seed=self.seed if self.seed is not None else 0,
            max_generations=self.max_generations,
            disable_mutation=self.disable_mutation,
        )

    def echo(self) -> dict:
        d = asdict(self)
        d["strategies"] = list(self.strategies)
        return d


def make_backend(config: RunConfig) -> Gateway:
    if config.backend == "mock":
        inner = MockBackend(config.seed, wrong_rate=config.mock_wrong_rate,
                            fail_repairs=config.mock_fail_repairs,
                            step_budget=config.step_budget)
    else:
        inner = RemoteBackend(config.endpoint, config.model)
    return Gateway(inner, config.in_flight, config.max_retries)


def _fitness(score):
    return {k: round(v, 6) for k, v in score.as_dict().items()}


class RunFailed(MiniLangError):
    """A run aborted mid-way; ``report`` holds what was produced."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


def run(config: RunConfig, backend=None, on_generation=None) -> dict:
    """Preprocess, generate, evolve; returns the run report as a mapping."""
    config.validate()
    started = time.monotonic()
    try:
        with open(config.program, encoding="utf-8") as fh:
            program = prepare_program(fh.read(), os.path.basename(config.program))
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {config.program}: {exc}") from None
    except ParseError as exc:
        raise ConfigError(f"program does not parse: {exc}") from None
    gateway = backend or make_backend(config)
    evaluator = FitnessEvaluator(program, config.step_budget)
    report = {
        "schema_version": SCHEMA_VERSION,
        "status": "running",
        "config": config.echo(),
        "program": {
            "path": config.program,
            "source": program.source,
            "focal_functions": [f.name for f in program.functions if f.is_focal],
            "focal_lines": len(program.focal_lines),
            "focal_branch_arms": 2 * len(program.focal_branches),
            "mutants": len(evaluator.mutants),
        },
        "initial_population": [],
        "generations": [],
    }
    try:
        records = generate_population(config.population_spec(), program, gateway,
                                      seed=config.seed or 0, workers=config.workers,
                                      step_budget=config.step_budget)
        initial = [r.suite for r in records]
        for r in records:
            report["initial_population"].append({
                "provenance": r.provenance,
                "agent": r.agent.agent_id,
                "temperature": r.agent.temperature,
                "suite_id": r.suite.suite_id,
                "methods": len(r.suite.methods),
                "repair_rounds": [s.round for s in r.repairs],
                "fixes_applied": sum(len(s.fixes_applied) for s in r.repairs),
                "error": r.error,
                "fitness": _fitness(evaluator.evaluate(r.suite)),
            })
        if all(r.error for r in records):
            raise LLMError(f"no initial suite could be generated; last error: {records[-1].error}")
        if config.disable_ga:
            best, score = rank_order([(s, evaluator.evaluate(s)) for s in initial])[0]
            early = False
        else:
            def progress(g):
                report["generations"].append(g.record())
                if on_generation is not None:
                    on_generation(g)
            result = run_evolution(initial, program, config.ga_params(), gateway,
                                   evaluator=evaluator, on_generation=progress)
            best, score, early = result.best, result.score, result.early_exit
            report["mutation"] = {"attempts": result.mutation_attempts,
                                  "accepted": result.mutation_accepted}
    except LLMError as exc:
        report["status"] = "failed"
        report["error"] = str(exc)
        report["stats"] = {"llm_calls": gateway.calls, "llm_failures": gateway.failures,
                           "wall_clock_seconds": round(time.monotonic() - started, 3)}
        raise RunFailed(str(exc), report) from exc
    passing = [m.name for m in best.methods if evaluator.passes(best, m)]
    mutation = execute_mutants(program, evaluator.mutants, passing, best, config.step_budget)
    report["final"] = {
        "suite_id": best.suite_id,
        "provenance": best.provenance,
        "methods": len(best.methods),
        "early_exit": early,
        "fitness": _fitness(score),
        "source": best.source,
    }
    report["mutants"] = mutant_records(mutation, program.source_path)
    report["stats"] = {"llm_calls": gateway.calls, "llm_failures": gateway.failures,
                       "wall_clock_seconds": round(time.monotonic() - started, 3)}
    report["status"] = "ok"
    return report


def score_files(program_path: str, suite_path: str, step_budget: int = DEFAULT_STEP_BUDGET):
    """Fitness of a suite file against a program file (no preprocessing)."""
    program = parse_file(program_path)
    with open(suite_path, encoding="utf-8") as fh:
        suite = split_methods(fh.read(), os.path.basename(suite_path))
    return FitnessEvaluator(program, step_budget).evaluate(suite)


def mutant_listing(program_path: str):
    """One line per mutant: id, operator, file:line, original -> mutated."""
    program = parse_file(program_path)
    name = os.path.basename(program_path)
    return [m.describe(name) for m in enumerate_mutants(program, True)]


__all__ = ["ConfigError", "ParseError", "RunConfig", "RunFailed", "SCHEMA_VERSION",
           "make_backend", "mutant_listing", "run", "score_files"]
