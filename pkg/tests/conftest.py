import numpy as np
import pytest

from belljump.hilbert import HermitianOperator, StateVector, basis_povm
from belljump.models import ModelSpec, two_level


def zero_model(dim=3, start=0) -> ModelSpec:
    psi = np.zeros(dim, dtype=complex)
    psi[start] = 1.0
    return ModelSpec("zero", HermitianOperator(np.zeros((dim, dim))), basis_povm(dim), StateVector(psi), t_end=1.0)


def random_hermitian_matrix(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def random_state(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


@pytest.fixture
def tl():
    return two_level()


@pytest.fixture
def tl_ctx(tl):
    return tl.context()


@pytest.fixture
def zero():
    return zero_model()
