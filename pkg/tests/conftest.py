import pytest

from spinprobe.rates import ProbeModel
from spinprobe.units import BTPoint

_ACCEPTANCE_LINES = []


@pytest.fixture
def model():
    return ProbeModel()


@pytest.fixture
def ref():
    return BTPoint.from_lab(43, 435)


@pytest.fixture
def acceptance_report():
    def record(criterion, ok, detail):
        _ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
