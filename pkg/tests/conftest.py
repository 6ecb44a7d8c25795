"""Collects one verdict line per acceptance criterion and prints them at the end."""

import pytest

VERDICTS = []


@pytest.fixture
def verdict():
    def record(label: str, passed: bool, detail: str):
        VERDICTS.append((label, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in VERDICTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
