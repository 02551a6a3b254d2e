import numpy as np
import pytest

from utils.linalg import Tolerances, set_tolerances
from utils.spin_algebra import SpinParams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fig2_params():
    """I=3 driven on the central transition: B1=0.5Q, B0=0.05Q, omega=Q."""
    return SpinParams(spin=3, Q=1.0, B0=0.05, B1=0.5, omega=1.0)


@pytest.fixture
def fig3_params():
    return SpinParams(spin=3, Q=1.0, B0=0.05, B1=0.5, omega=1.5)


@pytest.fixture(autouse=True)
def default_tolerances():
    set_tolerances(**Tolerances().to_dict())
    yield
    set_tolerances(**Tolerances().to_dict())


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)
