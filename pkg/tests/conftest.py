import numpy as np
import pytest

from adiabloch import bench
from adiabloch.models import lambda_model, qubit_nilpotent_model


@pytest.fixture(scope="session")
def lambda_pipe():
    """Dissipative Lambda system, all parameters 1, gamma = 10."""
    return bench.compute_effective(lambda_model(10.0))


@pytest.fixture(scope="session")
def lambda_pipe_certified():
    """Same model at a coupling where every block certificate applies."""
    return bench.compute_effective(lambda_model(81.0))


@pytest.fixture(scope="session")
def qubit_pipe():
    """Qubit whose strong generator carries an index-2 nilpotent."""
    return bench.compute_effective(qubit_nilpotent_model(10.0))


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(7)
