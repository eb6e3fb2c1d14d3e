import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record():
    """Store one pass/fail line per acceptance criterion for the terminal summary."""

    def _record(number: int, ok: bool, text: str):
        ACCEPTANCE_LINES[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {text}"
        print(ACCEPTANCE_LINES[number])
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
