import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def lowrank(rng, m, n, r):
    return rng.standard_normal((m, r)) @ rng.standard_normal((n, r)).T


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
