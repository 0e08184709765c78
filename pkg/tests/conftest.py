from __future__ import annotations

from pathlib import Path

import pytest

from cbr.program import parse_program

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixture_path():
    return lambda name: FIXTURES / name


@pytest.fixture
def f_program():
    return parse_program((FIXTURES / "f_reach.cbr").read_text())


@pytest.fixture
def f_unreachable():
    return parse_program((FIXTURES / "f_unreach.cbr").read_text())


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = [mod.RESULTS[k] for k in sorted(mod.RESULTS)] if mod else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
