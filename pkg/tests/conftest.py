import numpy as np
import pytest

from lindkoop.config import RunConfig
from lindkoop.koopman import eigen_triplets
from lindkoop.lindblad import SpinChainParams, dataset_split, simulate
from lindkoop.pipeline import run_fit


@pytest.fixture(scope="session")
def default_config():
    return RunConfig()


@pytest.fixture(scope="session")
def default_traj():
    return simulate(SpinChainParams(), "d,u,u,u,u")


@pytest.fixture(scope="session")
def default_fit(default_traj, default_config):
    return run_fit(default_traj, default_config)


@pytest.fixture(scope="session")
def default_triplets(default_fit):
    return eigen_triplets(default_fit.estimator)


@pytest.fixture(scope="session")
def default_split(default_traj):
    return dataset_split(default_traj, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_matrix(rng, d, hermitian=False):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return a + a.conj().T if hermitian else a


def random_density(rng, d):
    a = random_matrix(rng, d)
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
