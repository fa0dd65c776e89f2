import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))  # makes ``oracles`` importable

from suitevolve import fixtures  # noqa: E402
from suitevolve.minilang import parse  # noqa: E402
from suitevolve.suite import split_methods  # noqa: E402

DATA = os.path.join(os.path.dirname(__file__), "data")


def data_path(name):
    return os.path.join(DATA, name)


def load_fixture(name):
    program = parse(fixtures.read(name), f"{name}.mini")
    suite = split_methods(fixtures.read(name, suite=True), f"{name}.test.mini")
    return program, suite


@pytest.fixture(scope="session")
def manifest():
    return fixtures.manifest()


# One line per acceptance criterion, printed at the end of the session.
ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _n, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
