import numpy as np
import pytest

from src.models.hilbert import CoarseGraining, QuantumState, TensorSpace
from src.schemas.scenario import ModelConfig
from src.services.hilbert import basis_coarse_graining, computational_basis_coarse_graining
from src.services.thermo import build_model

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def cz() -> CoarseGraining:
    return computational_basis_coarse_graining(2)


@pytest.fixture
def cx() -> CoarseGraining:
    return basis_coarse_graining(H, labels=["+", "-"])


@pytest.fixture
def zero_state() -> QuantumState:
    return QuantumState.from_vector([1, 0])


@pytest.fixture
def two_qubits() -> TensorSpace:
    return TensorSpace((2, 2))


@pytest.fixture
def bell_state() -> QuantumState:
    return QuantumState.from_vector([1, 0, 0, 1])


@pytest.fixture
def classically_correlated() -> QuantumState:
    return QuantumState(np.diag([0.5, 0, 0, 0.5]))


@pytest.fixture(scope="session")
def chain8():
    """L=8, N=4, две ячейки по 4 узла"""
    return build_model(ModelConfig(
        sites=8, particles=4, hopping=1.0, hopping_nnn=0.32, interaction=1.0, cells=2
    ))


@pytest.fixture(scope="session")
def chain6_disordered():
    """L=6, N=3 со случайными потенциалами: локальные спектры невырождены"""
    potentials = np.random.default_rng(7).uniform(-1, 1, size=6).round(6).tolist()
    return build_model(ModelConfig(
        sites=6, particles=3, hopping=1.0, hopping_nnn=0.32, interaction=1.0,
        potentials=potentials, cells=2
    ))
