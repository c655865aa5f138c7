import numpy as np
import pytest
from hypothesis import settings

from modalstab.modal import build_modal
from modalstab.spectral import Boundary, CoupledPlant, InDomain, ScalarPlant

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []

BOUNDARY = ScalarPlant(15.0, Boundary(), 0.25)
COUPLED = CoupledPlant(10.0, 5.0, 10.0)


def indomain(zeta):
    return ScalarPlant(15.0, InDomain(zeta, 0.05), 0.4)


@pytest.fixture(scope="session")
def boundary_modal():
    return build_modal(BOUNDARY, 1000)


@pytest.fixture(scope="session")
def indomain_modal():
    return build_modal(indomain(0.7), 1000)


@pytest.fixture(scope="session")
def coupled_modal():
    return build_modal(COUPLED, 400)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
