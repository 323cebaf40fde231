import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_LINES: list[str] = []


@pytest.fixture(scope="session")
def criteria():
    """Collector for the one-line acceptance verdicts."""

    def record(number: int, passed: bool, text: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {text}"
        _LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
