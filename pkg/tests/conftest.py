import numpy as np
import pytest

from cavityphoton.inverse import CavityParams
from cavityphoton.shapes import make_catalog_shape

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ref_cavity():
    """Reference cavity (g, kappa, gamma) = 2 pi x (15, 3, 3) MHz."""
    return CavityParams.from_mhz(15, 3, 3)


@pytest.fixture(scope="session")
def sin2_shape():
    return make_catalog_shape("sin2", 3.14)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
