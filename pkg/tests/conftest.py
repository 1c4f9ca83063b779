"""Shared test fixtures and the acceptance summary section."""

import pytest

_criterion_lines = []


@pytest.fixture(scope="session")
def criterion_log():
    """Collector for one summary line per acceptance criterion."""
    return _criterion_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
