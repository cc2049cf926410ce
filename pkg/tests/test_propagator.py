import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.linalg import expm

from lindkoop import propagator
from lindkoop.lindblad import LindbladModel, SpinChainParams, lindblad_rhs
from lindkoop.propagator import AVAILABLE_BACKENDS, Propagator

from .conftest import random_density, random_matrix


def liouvillian(model):
    """Row-major vectorized generator: vec(A rho B) = kron(A, B.T) vec(rho)."""
    d = model.dim
    eye = np.eye(d)
    H = model.H
    gen = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for L in model.collapse_ops:
        LdL = L.conj().T @ L
        gen += np.kron(L, L.conj()) - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T))
    return gen


@pytest.fixture(scope="module")
def chain3():
    return LindbladModel.from_params(SpinChainParams(N=3, gamma=0.05))


def test_liouvillian_oracle_matches_rhs(chain3, rng):
    rho = random_density(rng, 8)
    np.testing.assert_allclose((liouvillian(chain3) @ rho.reshape(-1)).reshape(8, 8),
                               lindblad_rhs(chain3, rho), atol=1e-13)


@pytest.mark.parametrize("backend", AVAILABLE_BACKENDS)
def test_matches_exact_exponential(chain3, rng, backend):
    rho = random_density(rng, 8)
    exact = (expm(liouvillian(chain3) * 2.0) @ rho.reshape(-1)).reshape(8, 8)
    got = Propagator(chain3.H, chain3.collapse_ops, backend=backend).evolve(rho, 0.01, 200)
    assert np.max(np.abs(got - exact)) < 1e-9


@pytest.mark.parametrize("backend", AVAILABLE_BACKENDS)
def test_rk4_fourth_order(chain3, rng, backend):
    rho = random_density(rng, 8)
    exact = (expm(liouvillian(chain3) * 4.0) @ rho.reshape(-1)).reshape(8, 8)
    prop = Propagator(chain3.H, chain3.collapse_ops, backend=backend)
    err = [np.max(np.abs(prop.evolve(rho, 4.0 / n, n) - exact)) for n in (10, 20)]
    assert err[0] / err[1] == pytest.approx(16, rel=0.15)


@pytest.mark.skipif("compiled" not in AVAILABLE_BACKENDS, reason="extension not built")
def test_backends_agree_on_generic_operators(rng):
    H = random_matrix(rng, 8, hermitian=True)
    jumps = [0.1 * random_matrix(rng, 8) for _ in range(3)] + [np.zeros((8, 8))]
    rho = random_density(rng, 8)
    a = Propagator(H, jumps, backend="compiled").evolve(rho, 0.005, 40)
    b = Propagator(H, jumps, backend="python").evolve(rho, 0.005, 40)
    assert np.max(np.abs(a - b)) < 1e-13


def test_shape_check(chain3):
    with pytest.raises(ValueError):
        Propagator(chain3.H, chain3.collapse_ops).evolve(np.eye(4), 0.1, 1)


def test_unknown_backend(chain3):
    with pytest.raises(ValueError):
        Propagator(chain3.H, chain3.collapse_ops, backend="gpu")


def test_env_forces_python_fallback():
    env = dict(os.environ, LINDKOOP_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import lindkoop; print(lindkoop.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_default_prefers_compiled():
    expected = "compiled" if "compiled" in AVAILABLE_BACKENDS else "python"
    if os.environ.get("LINDKOOP_BACKEND", "") == "python":
        expected = "python"
    assert propagator.default_backend() == expected
