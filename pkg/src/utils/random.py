"""
Случайные состояния, унитарные матрицы и огрубления с явным генератором.
"""
from typing import List, Optional
import numpy as np
from scipy.stats import unitary_group

from src.models.hilbert import CoarseGraining, KrausCoarseGraining, QuantumState
from src.utils.linalg import split_columns


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Унитарная матрица по мере Хаара"""
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(dim, random_state=rng)


def random_density_matrix(
    dim: int, rng: np.random.Generator, rank: Optional[int] = None
) -> QuantumState:
    """ρ = G G† / tr(G G†) для комплексной гауссовой G размера dim × rank"""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return QuantumState(rho / np.trace(rho).real, validate=False)


def random_pure_state(dim: int, rng: np.random.Generator) -> QuantumState:
    return QuantumState.from_vector(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_partition(dim: int, rng: np.random.Generator, parts: Optional[int] = None) -> List[int]:
    """Случайные положительные размеры блоков с суммой dim"""
    parts = int(rng.integers(1, dim + 1)) if parts is None else parts
    cuts = np.sort(rng.choice(np.arange(1, dim), size=parts - 1, replace=False)) if parts > 1 else []
    edges = [0, *cuts, dim]
    return [int(b - a) for a, b in zip(edges[:-1], edges[1:])]


def random_coarse_graining(
    dim: int, rng: np.random.Generator, parts: Optional[int] = None
) -> CoarseGraining:
    """Разбиение случайного базиса на подпространства случайных размеров"""
    u = random_unitary(dim, rng)
    sizes = random_partition(dim, rng, parts)
    return CoarseGraining.from_bases(split_columns(u, sizes), list(range(len(sizes))), validate=False)


def random_kraus(dim: int, count: int, rng: np.random.Generator) -> KrausCoarseGraining:
    """Операторы Крауса - блоки случайной изометрии dim -> count·dim"""
    v = random_unitary(count * dim, rng)[:, :dim]
    operators = [v[k * dim:(k + 1) * dim, :] for k in range(count)]
    return KrausCoarseGraining(tuple(operators), tuple(range(count)))
