import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lindjump.gaussian import GaussianState
from lindjump.model import damped_oscillator, position_measurement

settings.register_profile("lindjump", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lindjump")


@pytest.fixture(scope="session")
def ex1():
    return position_measurement()


@pytest.fixture(scope="session")
def ex2():
    return damped_oscillator()


@pytest.fixture(scope="session")
def squeezed():
    return GaussianState.squeezed(2.0, (2.0, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
