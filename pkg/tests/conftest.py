import pytest

_LINES = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        _LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
