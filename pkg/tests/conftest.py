import numpy as np
import pytest

from crosslab.dynsys import GOLDEN, DynamicalSystem


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def rotation():
    return DynamicalSystem.rotation(GOLDEN)


@pytest.fixture
def point():
    return DynamicalSystem.point()


@pytest.fixture
def period2():
    return DynamicalSystem.periodic(2)


SYSTEMS = {
    "point": DynamicalSystem.point(),
    "torus": DynamicalSystem.rotation(GOLDEN),
    "torus2d": DynamicalSystem.rotation([GOLDEN, np.sqrt(2) - 1], rank=2),
    "torus_in_2": DynamicalSystem.rotation([GOLDEN, np.sqrt(3) - 1]),
    "cyclic3": DynamicalSystem.periodic(3),
    "cyclic2x2": DynamicalSystem.periodic([2, 3]),
}


# filled by test_acceptance, echoed once at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
