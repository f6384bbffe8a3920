"""Shared pytest plumbing.

The acceptance suite reports one PASS/FAIL line per criterion; the lines
are collected here and echoed as a terminal summary section so they stay
visible in captured-output runs.
"""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    def check(ok: bool, criterion: str, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} - {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
