import numpy as np
import pytest

# 50-point grid over (1/16, 1/12], endpoint included
B_GRID = np.linspace(1 / 16 + 1e-6, 1 / 12, 50)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance results, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
