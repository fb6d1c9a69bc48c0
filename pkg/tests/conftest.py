import pytest

from tdramsim import SimConfig

# criterion lines collected by test_acceptance.py, printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def cfg():
    return SimConfig.desk()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
