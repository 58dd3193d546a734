import numpy as np
import pytest

from stellarvps import models
from stellarvps.ans_solver import refinement_ladder


@pytest.fixture(scope="session")
def quadratic8():
    return models.fixture("quadratic-5.1", R=8.0)


@pytest.fixture(scope="session")
def ladder_quadratic(quadratic8):
    return refinement_ladder(quadratic8.G0, 8.0, 128, reference=quadratic8.density)


@pytest.fixture(scope="session")
def ladder_sqrt():
    fx = models.fixture("sqrt-q-5.8")
    return refinement_ladder(fx.G0, 8.0, 128)


@pytest.fixture(scope="session")
def quartic():
    return models.fixture("quartic-5.9")


def rel(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)) / np.abs(np.asarray(b))


def pytest_terminal_summary(terminalreporter):
    from oracles import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
