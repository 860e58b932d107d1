import numpy as np
import pytest

from genpickands import TailGrid, pareto

ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    """Register a one-line pass/fail verdict for the terminal summary."""

    def record(name, passed, detail):
        ACCEPTANCE_LINES.append(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}")
        print(ACCEPTANCE_LINES[-1])

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def pareto1():
    return pareto(1.0)


@pytest.fixture
def mid_grid():
    return TailGrid.linspace(0.3, 0.7, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
