"""
Общие операции плотной линейной алгебры.
"""
from functools import reduce
from typing import Sequence, List
import numpy as np
from scipy import linalg


def as_complex_matrix(matrix) -> np.ndarray:
    """Приведение к квадратной комплексной матрице"""
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"ожидалась квадратная матрица, получено {m.shape}")
    return m


def hermitian_residual(matrix: np.ndarray) -> float:
    """max |M - M†|"""
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def hermitize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def identity_residual(matrix: np.ndarray) -> float:
    """max |M - I|"""
    if not matrix.size:
        return 0.0
    return float(np.max(np.abs(matrix - np.eye(matrix.shape[0]))))


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, factors)


def orthonormalize(columns: np.ndarray) -> np.ndarray:
    """Ближайшая изометрия (полярное разложение)"""
    if columns.shape[1] == 0:
        return columns
    u, _ = linalg.polar(columns)
    return u


def partial_trace(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """
    Частичный след по всем подсистемам, кроме keep.

    Подсистемы упорядочены как в np.kron: первая - самая старшая.
    """
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    traced = [k for k in range(n) if k not in keep]
    tensor = matrix.reshape(dims + dims)
    # сворачиваем по одной подсистеме, начиная с последней, чтобы не сбивать оси
    current = n
    for k in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=k, axis2=k + current)
        current -= 1
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(kept_dim, kept_dim)


def spectral_range(eigenvalues: np.ndarray) -> float:
    if eigenvalues.size == 0:
        return 0.0
    return float(eigenvalues.max() - eigenvalues.min())


def split_columns(matrix: np.ndarray, sizes: Sequence[int]) -> List[np.ndarray]:
    """Разрезать столбцы матрицы на блоки заданных размеров"""
    return np.split(matrix, np.cumsum(sizes)[:-1], axis=1)


def block_eigh(matrix: np.ndarray, blocks: np.ndarray):
    """
    Спектральное разложение эрмитовой матрицы, блочно-диагональной по меткам blocks.

    Собственные векторы имеют определенную метку блока (например, число частиц).
    Returns:
        (собственные значения, собственные векторы, метка блока каждого вектора),
        упорядоченные по возрастанию собственного значения
    """
    n = matrix.shape[0]
    blocks = np.asarray(blocks)
    values = np.empty(n)
    vectors = np.zeros((n, n), dtype=matrix.dtype)
    owners = np.empty(n, dtype=blocks.dtype)
    start = 0
    for label in np.unique(blocks):
        rows = np.flatnonzero(blocks == label)
        w, v = linalg.eigh(hermitize(matrix[np.ix_(rows, rows)]))
        stop = start + rows.size
        values[start:stop] = w
        vectors[rows, start:stop] = v
        owners[start:stop] = label
        start = stop
    order = np.argsort(values, kind="stable")
    return values[order], vectors[:, order], owners[order]
