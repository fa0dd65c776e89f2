import os

import httpx
import pytest
import yaml
from click.testing import CliRunner

from conftest import data_path
from oracles import oracle_mutant_programs
from suitevolve import fixtures
from suitevolve.cli import cli, main
from suitevolve.llm import Gateway, MockBackend, RemoteBackend
from suitevolve.minilang import parse
from suitevolve.pipeline import ConfigError, RunConfig, RunFailed, mutant_listing, run, score_files

SMALL = dict(samples_per_strategy=1, max_generations=2, seed=5)


def strip_timing(report):
    out = dict(report)
    out.pop("stats", None)
    out["generations"] = [{k: v for k, v in g.items() if k != "elapsed_seconds"}
                          for g in report["generations"]]
    return out


def test_run_report_shape():
    report = run(RunConfig(program=str(fixtures.path("triangle")), seed=5))
    assert report["schema_version"] == 1 and report["status"] == "ok"
    assert len(report["initial_population"]) == 25
    best_initial = max(e["fitness"]["scalar"] for e in report["initial_population"])
    assert report["final"]["fitness"]["scalar"] >= best_initial - 1e-6
    assert len(report["mutants"]) == report["program"]["mutants"]
    assert report["stats"]["llm_calls"] > 0
    yaml.safe_load(yaml.safe_dump(report))  # serialisable


def test_disable_ga_returns_best_initial():
    cfg = RunConfig(program=str(fixtures.path("gcd")), disable_ga=True, **SMALL)
    report = run(cfg)
    assert report["generations"] == []
    ranked = sorted(report["initial_population"],
                    key=lambda e: (-e["fitness"]["scalar"], e["suite_id"]))
    assert report["final"]["fitness"] == ranked[0]["fitness"]


def test_temperature_diversity_ablation_uses_a1_everywhere():
    cfg = RunConfig(program=str(fixtures.path("gcd")), disable_temperature_diversity=True, **SMALL)
    spec = cfg.population_spec()
    assert {(a.temperature, a.system_prompt) for a in spec.strategies} == {(0.3, "gen_A1")}
    assert [a.agent_id for a in spec.strategies] == ["A1", "A2", "A3", "A4", "A5"]
    report = run(cfg)
    assert {e["temperature"] for e in report["initial_population"]} == {0.3}


def test_missing_program_is_config_error_before_llm():
    calls = Gateway(MockBackend(1))
    with pytest.raises(ConfigError):
        run(RunConfig(program="/nonexistent.mini", seed=1), backend=calls)
    assert calls.calls == 0


def test_unparsable_program_is_config_error(tmp_path):
    bad = tmp_path / "bad.mini"
    bad.write_text("fn f( {")
    gw = Gateway(MockBackend(1))
    with pytest.raises(ConfigError):
        run(RunConfig(program=str(bad), seed=1), backend=gw)
    assert gw.calls == 0


def test_mock_needs_seed():
    with pytest.raises(ConfigError):
        RunConfig(program=str(fixtures.path("gcd"))).validate()


def test_reproducible_reports():
    cfg = RunConfig(program=str(fixtures.path("clamp")), **SMALL)
    assert strip_timing(run(cfg)) == strip_timing(run(cfg))


def test_auth_failure_gives_partial_report():
    backend = RemoteBackend("https://llm.example", "m", api_key="bad",
                            transport=httpx.MockTransport(lambda r: httpx.Response(403)),
                            sleep=lambda s: None)
    cfg = RunConfig(program=str(fixtures.path("gcd")), seed=1, samples_per_strategy=1)
    with pytest.raises(RunFailed) as err:
        run(cfg, backend=Gateway(backend))
    assert err.value.report["status"] == "failed"
    assert backend.http_requests >= 1


def test_score_matches_manifest(manifest):
    for name in ("triangle", "leapyear", "strscan"):
        s = score_files(fixtures.path(name), fixtures.path(name, suite=True))
        assert s.scalar == pytest.approx(manifest["fixtures"][name]["scalar"], abs=1e-9)


def test_score_empty_suite(tmp_path):
    empty = tmp_path / "e.test.mini"
    empty.write_text("")
    s = score_files(fixtures.path("triangle"), str(empty))
    assert (s.lcct, s.bcct, s.msct, s.scalar) == (0, 0, 0, 0)


def test_score_perfect_single_function(tmp_path):
    prog = tmp_path / "id.mini"
    prog.write_text("fn id(x) { return x; }\n")
    suite = tmp_path / "id.test.mini"
    suite.write_text("test t() { assert_eq(id(4), 4); }\n")
    assert score_files(str(prog), str(suite)).scalar == 100


@pytest.mark.parametrize("name", ["triangle", "bucket", "strscan"])
def test_mutant_listing_matches_oracle(name):
    lines = mutant_listing(str(fixtures.path(name)))
    assert len(lines) == len(oracle_mutant_programs(parse(fixtures.read(name))))
    assert [int(l.split()[0]) for l in lines] == list(range(len(lines)))
    assert all(f"{name}.mini:" in l and " -> " in l for l in lines)


# ------------------------------------------------------------ command line

def invoke(*args):
    return CliRunner().invoke(cli, list(args))


def test_cli_score_and_mutants(manifest):
    r = invoke("score", str(fixtures.path("triangle")), str(fixtures.path("triangle", suite=True)))
    want = manifest["fixtures"]["triangle"]["scalar"]
    assert r.exit_code == 0 and f"scalar: {want:.2f}" in r.output
    r = invoke("mutants", str(fixtures.path("basics")))
    assert r.exit_code == 0 and len(r.output.splitlines()) == 19


def test_cli_run_writes_report_and_suite(tmp_path):
    report, suite = tmp_path / "r.yaml", tmp_path / "best.test.mini"
    r = invoke("run", str(fixtures.path("gcd")), "--seed", "2", "--samples-per-strategy", "1",
               "--max-generations", "2", "--report", str(report), "--suite-out", str(suite))
    assert r.exit_code == 0, r.output
    data = yaml.safe_load(report.read_text())
    assert data["final"]["source"] == suite.read_text()
    assert data["config"]["seed"] == 2


def test_cli_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("seed: 3\nsamples_per_strategy: 1\nmax_generations: 1\ndisable_ga: true\n")
    out = tmp_path / "r.yaml"
    r = invoke("run", str(fixtures.path("basics")), "--config", str(cfg), "--seed", "9",
               "--report", str(out))
    assert r.exit_code == 0, r.output
    data = yaml.safe_load(out.read_text())
    assert data["config"]["seed"] == 9 and data["config"]["disable_ga"] is True


def test_cli_gen(tmp_path):
    r = invoke("gen", str(fixtures.path("clamp")), str(tmp_path), "--seed", "1",
               "--samples-per-strategy", "1")
    assert r.exit_code == 0
    assert sorted(os.listdir(tmp_path)) == [f"A{i}-0.test.mini" for i in range(1, 6)]


def test_cli_test_command():
    r = invoke("test", str(fixtures.path("triangle")), data_path("a1_triangle.test.mini"))
    assert r.exit_code == 0 and "3 passed, 0 failed" in r.output


def test_exit_codes(tmp_path, monkeypatch):
    assert main(["score", str(fixtures.path("gcd")), str(fixtures.path("gcd", suite=True))]) == 0
    assert main(["run", str(fixtures.path("gcd"))]) == 1                  # no seed
    assert main(["run", str(tmp_path / "none.mini"), "--seed", "1"]) == 1
    assert main(["--no-such-flag"]) == 1
    monkeypatch.setenv("SUITEVOLVE_API_KEY", "k")
    report = tmp_path / "partial.yaml"
    code = main(["run", str(fixtures.path("gcd")), "--backend", "remote", "--endpoint",
                 "http://127.0.0.1:9", "--model", "m", "--max-retries", "0",
                 "--samples-per-strategy", "1", "--report", str(report)])
    assert code == 2
    assert yaml.safe_load(report.read_text())["status"] == "failed"
