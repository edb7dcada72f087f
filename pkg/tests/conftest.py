"""Pytest wiring: repeats the acceptance verdict lines after the test run.

Acceptance tests record one [PASS]/[FAIL] line each through record_verdict;
printing them from pytest_terminal_summary keeps them visible even though
per-test stdout is captured.
"""

ACCEPTANCE_LINES: list[str] = []


def record_verdict(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
