"""Regenerate ``src/suitevolve/fixtures/manifest.json`` from the test oracles.

Every number here comes from ``tests/oracles.py`` (AST-walking interpreter,
recursive mutant generator), never from the engine under test.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import (  # noqa: E402
    count_statements, oracle_coverage, oracle_fitness, oracle_mutant_programs,
)
from suitevolve import fixtures  # noqa: E402
from suitevolve.minilang import parse_file  # noqa: E402
from suitevolve.minilang.nodes import If, While, iter_stmts  # noqa: E402
from suitevolve.suite import split_methods  # noqa: E402


def describe(name):
    program = parse_file(fixtures.path(name))
    suite = split_methods(fixtures.read(name, True), fixtures.path(name, True))
    focal = [f for f in program.functions if f.is_focal]
    conds = sum(isinstance(s, (If, While)) for f in focal for s in iter_stmts(f.body))
    lines, arms, passing = oracle_coverage(program, suite)
    lcct, bcct, msct, scalar = oracle_fitness(program, suite)
    return {
        "program": f"{name}.mini",
        "suite": f"{name}.test.mini",
        "functions": [f.name for f in program.functions],
        "focal_functions": [f.name for f in focal],
        "statements": count_statements(program.functions),
        "focal_lines": count_statements(focal),
        "branch_ids": sum(isinstance(s, (If, While)) for f in program.functions
                          for s in iter_stmts(f.body)),
        "focal_branch_arms": 2 * conds,
        "focal_mutants": len(oracle_mutant_programs(program)),
        "suite_methods": len(suite.methods),
        "suite_passing": len(passing),
        "covered_lines": len(lines),
        "covered_arms": len(arms),
        "lcct": lcct,
        "bcct": bcct,
        "msct": msct,
        "scalar": scalar,
    }


def main():
    data = {"schema_version": 1, "fixtures": {n: describe(n) for n in fixtures.NAMES}}
    out = ROOT / "src" / "suitevolve" / "fixtures" / "manifest.json"
    out.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
