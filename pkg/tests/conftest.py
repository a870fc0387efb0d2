import pytest

from deform.recursion import deform_to
from shared import run_ids

SEED = 20240517
RTOL = 1e-10
ATOL = 1e-12


@pytest.fixture(scope="session")
def state3():
    """Q_0 .. Q_2 fixed, defining residual zero mod ε^3."""
    return deform_to(3)


@pytest.fixture(scope="session")
def state5():
    return deform_to(5)


@pytest.fixture(scope="session")
def state6():
    return deform_to(6)


@pytest.fixture(scope="session")
def state8():
    """Used by the acceptance runs marked slow."""
    return deform_to(8)


@pytest.fixture(autouse=True)
def test_run_id():
    run_ids.set_run_id(run_ids.generate_run_id("test"))
    yield
    run_ids.clear_run_id()
