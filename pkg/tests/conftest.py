import json

import pytest

from radialrestore import load_fixture
from radialrestore.netmodel import parse_case

TOL = 1e-8

_criteria: dict[str, tuple[bool, str]] = {}


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    _criteria[name] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda k: int(k.split()[0].strip("C."))):
        passed, detail = _criteria[name]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


def make_case(doc: dict):
    return parse_case(json.dumps(doc))


@pytest.fixture
def ring4():
    return load_fixture("ring4")


@pytest.fixture
def two_bus():
    return load_fixture("two_bus")


@pytest.fixture
def tree5():
    return load_fixture("tree5")


@pytest.fixture
def mesh12():
    return load_fixture("mesh12")
