"""Shared fixtures; collects the acceptance summary printed after the run."""

import pytest

_CRITERION_LINES = []


@pytest.fixture(scope="session")
def criterion_log():
    """Append one '[PASS]'/'[FAIL]' line per acceptance criterion."""
    return _CRITERION_LINES


def pytest_terminal_summary(terminalreporter):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
