import pytest

_LINES: dict[int, str] = {}


def format_line(num: int, passed: bool, detail: str) -> str:
    return f"criterion {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


@pytest.fixture
def report_criterion():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    def report(num: int, passed: bool, detail: str) -> None:
        line = format_line(num, passed, detail)
        _LINES[num] = line
        print(line)
    return report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for num in sorted(_LINES):
            terminalreporter.write_line(_LINES[num])
