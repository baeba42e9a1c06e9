"""Shared pytest wiring.

The acceptance tests record one verdict line per criterion; the terminal
summary hook replays them at the end of the run so the pass/fail lines are
visible even without -s.
"""

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(criterion: int, ok: bool, detail: str) -> None:
        mark = "PASS" if ok else "FAIL"
        line = f"[criterion {criterion}] {mark} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
