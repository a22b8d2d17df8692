import numpy as np
import pytest

from lrfk.core import FkModel
from lrfk.couplings import CouplingSpec
from lrfk.lattice import Box, make_box


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance checklist after capture is released."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def line_box(n: int) -> Box:
    """A 1D box with exactly n vertices 0..n-1."""
    return Box(1, (0,), float(n), "euclidean", tuple((i,) for i in range(n)))


def small_model(radius=3, beta=0.5, q=2.0, convention="es", c=2.0):
    box = make_box(1, (0,), radius)
    spec = CouplingSpec.power_law(c, 1, "euclidean")
    return FkModel(box, spec, beta, q, convention)


@pytest.fixture(scope="session")
def pl_spec():
    """1D power-law coupling J = |x|^-2, the workhorse family."""
    return CouplingSpec.power_law(2.0, 1, "euclidean")


@pytest.fixture(scope="session")
def model5_es():
    return small_model(3, 0.5, 2.0, "es")


@pytest.fixture(scope="session")
def model5_paper():
    return small_model(3, 0.5, 2.0, "paper")
