import pytest

_ACCEPTANCE_LINES = []


class AcceptanceLog:
    """Records one PASS/FAIL line per acceptance criterion before asserting it."""

    def check(self, criterion, ok, detail):
        _ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
        print(_ACCEPTANCE_LINES[-1])
        assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture
def acceptance_log():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
