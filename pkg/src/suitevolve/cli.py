"""Command-line entry point.

Exit status: 0 on success, 1 for invalid input (bad flags, configuration,
unreadable or unparsable files), 2 when a run fails after starting (model
authentication or availability errors). A failed run still writes its
partial report.
"""

from __future__ import annotations

import logging
import os
import sys

import click
import yaml

from . import __version__
from .genesis import generate_population, prepare_program
from .minilang.errors import MiniLangError
from .minilang.interp import run_test_method
from .minilang.program import parse_file
from .pipeline import ConfigError, RunConfig, RunFailed, make_backend, mutant_listing, run, score_files
from .suite import split_methods

EXIT_OK, EXIT_INPUT, EXIT_RUN = 0, 1, 2


class RunError(click.ClickException):
    exit_code = EXIT_RUN


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise click.ClickException(f"cannot load config {path}: {exc}")
    if not isinstance(data, dict):
        raise click.ClickException(f"config {path} must be a mapping")
    return data


def _write_report(report, path):
    text = yaml.safe_dump(report, sort_keys=False, allow_unicode=True)
    if path in (None, "-"):
        click.echo(text, nl=False)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", count=True, help="More logging (repeatable).")
def cli(verbose):
    """Generate and evolve MiniLang test suites."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.command("run")
@click.argument("program", type=click.Path(dir_okay=False))
@click.option("--config", "config_path", type=click.Path(dir_okay=False),
              help="YAML file with run settings; flags override it.")
@click.option("--backend", type=click.Choice(["mock", "remote"]))
@click.option("--seed", type=int)
@click.option("--endpoint")
@click.option("--model")
@click.option("--in-flight", type=int)
@click.option("--max-retries", type=int)
@click.option("--samples-per-strategy", type=int)
@click.option("--strategies", help="Comma-separated agent ids, e.g. A1,A3.")
@click.option("--crossover-probability", type=float)
@click.option("--time-budget", "time_budget_seconds", type=float)
@click.option("--selection-pressure", type=float)
@click.option("--max-generations", type=int)
@click.option("--unbounded-generations", is_flag=True,
              help="Stop on the time budget or a perfect score only.")
@click.option("--step-budget", type=int)
@click.option("--workers", type=int)
@click.option("--report", type=click.Path(dir_okay=False), help="Report path; '-' for stdout.")
@click.option("--disable-ga", is_flag=True, default=None)
@click.option("--disable-temperature-diversity", is_flag=True, default=None)
@click.option("--disable-mutation", is_flag=True, default=None)
@click.option("--suite-out", type=click.Path(dir_okay=False),
              help="Also write the final suite source here.")
def run_cmd(program, config_path, strategies, unbounded_generations, suite_out, **flags):
    """Generate an initial population for PROGRAM and evolve it."""
    data = _load_config(config_path)
    if strategies is not None:
        flags["strategies"] = [s.strip() for s in strategies.split(",") if s.strip()]
    flags = {k: (v or None) if isinstance(v, bool) else v for k, v in flags.items()}
    try:
        config = RunConfig.from_mapping(data, program=program, **flags)
        if unbounded_generations:
            config = RunConfig.from_mapping({**config.echo(), "max_generations": None})
        config.validate()
    except (ConfigError, TypeError, ValueError) as exc:
        raise click.ClickException(str(exc))
    try:
        report = run(config)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    except MiniLangError as exc:
        if isinstance(exc, RunFailed):
            _write_report(exc.report, config.report)
        raise RunError(str(exc))
    _write_report(report, config.report)
    if suite_out:
        with open(suite_out, "w", encoding="utf-8") as fh:
            fh.write(report["final"]["source"])
    if config.report not in (None, "-"):
        f = report["final"]["fitness"]
        click.echo(f"final {report['final']['suite_id']}: scalar {f['scalar']:.2f} "
                   f"(line {f['lcct']:.2f}, branch {f['bcct']:.2f}, mutation {f['msct']:.2f})",
                   err=True)


@cli.command("score")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@click.argument("suite", type=click.Path(exists=True, dir_okay=False))
@click.option("--step-budget", type=int, default=100_000, show_default=True)
def score_cmd(program, suite, step_budget):
    """Line, branch and mutation scores of SUITE against PROGRAM."""
    try:
        score = score_files(program, suite, step_budget)
    except MiniLangError as exc:
        raise click.ClickException(str(exc))
    for k, v in score.as_dict().items():
        click.echo(f"{k}: {v:.2f}")


@cli.command("test")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@click.argument("suite", type=click.Path(exists=True, dir_okay=False))
@click.option("--step-budget", type=int, default=100_000, show_default=True)
def test_cmd(program, suite, step_budget):
    """Run every test of SUITE and show failures with their traces."""
    try:
        prog = parse_file(program)
        with open(suite, encoding="utf-8") as fh:
            s = split_methods(fh.read(), os.path.basename(suite))
        failed = 0
        for name in s.method_names:
            out = run_test_method(prog, s, name, step_budget)
            click.echo(f"{'PASS' if out.passed else 'FAIL'} {name}")
            if not out.passed:
                failed += 1
                click.echo(out.report)
    except MiniLangError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{len(s.methods) - failed} passed, {failed} failed")


@cli.command("mutants")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
def mutants_cmd(program):
    """List the first-order mutants of PROGRAM's focal functions."""
    try:
        lines = mutant_listing(program)
    except MiniLangError as exc:
        raise click.ClickException(str(exc))
    for line in lines:
        click.echo(line)


@cli.command("gen")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--seed", type=int, required=True)
@click.option("--samples-per-strategy", type=int, default=5, show_default=True)
def gen_cmd(program, out_dir, seed, samples_per_strategy):
    """Write one repaired, coverage-enhanced suite per agent sample (mock backend)."""
    try:
        config = RunConfig(program=program, seed=seed,
                           samples_per_strategy=samples_per_strategy)
        config.validate()
        with open(program, encoding="utf-8") as fh:
            prog = prepare_program(fh.read(), os.path.basename(program))
        records = generate_population(config.population_spec(), prog,
                                      make_backend(config), seed=seed)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    except MiniLangError as exc:
        raise RunError(str(exc))
    os.makedirs(out_dir, exist_ok=True)
    for r in records:
        path = os.path.join(out_dir, r.suite.filename)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(r.suite.source)
        click.echo(f"{path}: {len(r.suite.methods)} tests")


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="suitevolve", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_INPUT
    except RunError as exc:
        exc.show()
        return EXIT_RUN
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
