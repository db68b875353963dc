"""
Конструкторы огрублений и операции над конечномерными пространствами.
"""
import itertools
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
from scipy import linalg

from src.core.config import settings
from src.core.exceptions import (
    ConfigError, DimensionMismatch, InvalidCoarseGraining, NonCommuting, NonHermitian
)
from src.models.hilbert import (
    CoarseGraining, Label, Observable, QuantumState, TensorSpace
)
from src.utils.linalg import (
    hermitian_residual, hermitize, identity_residual, kron_all, partial_trace as _partial_trace,
    spectral_range
)
from src.utils.logger import hilbert_logger as logger


# === Огрубления из спектра ===

def coarse_graining_from_spectrum(
    eigenvalues: np.ndarray,
    eigenvectors: np.ndarray,
    degeneracy_tol: Optional[float] = None
) -> CoarseGraining:
    """
    Группировка собственных векторов по (почти) вырожденным собственным значениям.

    Соседние значения, отличающиеся не более чем на degeneracy_tol * max(размах
    спектра, max|a|, 1), попадают в один проектор; метка - среднее значение группы.
    Скалярная наблюдаемая с шумом округления дает один проектор.
    """
    tol = settings.DEGENERACY_TOL if degeneracy_tol is None else degeneracy_tol
    order = np.argsort(eigenvalues, kind="stable")
    values = np.asarray(eigenvalues)[order]
    vectors = np.asarray(eigenvectors)[:, order]
    scale = max(spectral_range(values), float(np.max(np.abs(values), initial=0.0)), 1.0)
    threshold = tol * scale

    groups: List[List[int]] = [[0]]
    for k in range(1, len(values)):
        if values[k] - values[k - 1] <= threshold:
            groups[-1].append(k)
        else:
            groups.append([k])

    bases = [vectors[:, g] for g in groups]
    labels = [float(np.mean(values[g])) for g in groups]
    return CoarseGraining.from_bases(bases, labels, validate=False)


def energy_shell_from_spectrum(
    eigenvalues: np.ndarray,
    eigenvectors: np.ndarray,
    shell_width: float,
    origin: Optional[float] = None
) -> CoarseGraining:
    """
    Разбиение собственных векторов по полуинтервалам [origin + kΔE, origin + (k+1)ΔE).

    Пустые оболочки отбрасываются; метка - нижняя граница оболочки.
    При ΔE = 0 работает как группировка вырожденных значений.
    """
    if shell_width < 0:
        raise ConfigError("Ширина энергетической оболочки должна быть неотрицательной")
    if shell_width == 0:
        return coarse_graining_from_spectrum(eigenvalues, eigenvectors)

    values = np.asarray(eigenvalues)
    vectors = np.asarray(eigenvectors)
    origin = float(values.min()) if origin is None else float(origin)
    # защита от значений, лежащих на границе оболочки с точностью до округления
    bins = np.floor((values - origin) / shell_width + 1e-9).astype(int)

    bases, labels = [], []
    for k in np.unique(bins):
        members = np.flatnonzero(bins == k)
        bases.append(vectors[:, members])
        labels.append(origin + int(k) * shell_width)
    return CoarseGraining.from_bases(bases, labels, validate=False)


def _eigh_observable(obs: Observable) -> Tuple[np.ndarray, np.ndarray]:
    residual = hermitian_residual(obs.matrix)
    if residual > settings.HERMITIAN_TOL:
        raise NonHermitian("Наблюдаемая не эрмитова", details={"hermitian": residual})
    return linalg.eigh(hermitize(obs.matrix))


def coarse_graining_from_observable(
    obs: Observable, degeneracy_tol: Optional[float] = None
) -> CoarseGraining:
    """Спектральное разложение Â = Σ a P_a"""
    values, vectors = _eigh_observable(obs)
    return coarse_graining_from_spectrum(values, vectors, degeneracy_tol)


def energy_shell_coarse_graining(
    obs: Observable, shell_width: float, origin: Optional[float] = None
) -> CoarseGraining:
    """Огрубление по энергетическим оболочкам ширины ΔE"""
    if shell_width < 0:
        raise ConfigError("Ширина энергетической оболочки должна быть неотрицательной")
    values, vectors = _eigh_observable(obs)
    return energy_shell_from_spectrum(values, vectors, shell_width, origin)


def coarse_grained_observable(cg: CoarseGraining) -> Observable:
    """Σ_a a P_a (например, огрубленный гамильтониан H^(ΔE))"""
    try:
        weights = [float(label) for label in cg.labels]
    except (TypeError, ValueError):
        raise InvalidCoarseGraining("Метки огрубления не являются числами")
    matrix = sum(w * p.matrix for w, p in zip(weights, cg.elements))
    return Observable(matrix, validate=False)


def trivial_coarse_graining(dim: int) -> CoarseGraining:
    """C_I = {I}: измерение не производится"""
    return CoarseGraining.from_bases([np.eye(dim, dtype=complex)], [None], validate=False)


def basis_coarse_graining(
    unitary: np.ndarray, labels: Optional[Sequence[Label]] = None
) -> CoarseGraining:
    """Огрубление ранга 1 по столбцам унитарной матрицы"""
    unitary = np.asarray(unitary, dtype=complex)
    dim = unitary.shape[1]
    labels = list(range(dim)) if labels is None else list(labels)
    return CoarseGraining.from_bases([unitary[:, [k]] for k in range(dim)], labels)


def computational_basis_coarse_graining(dim: int) -> CoarseGraining:
    return basis_coarse_graining(np.eye(dim, dtype=complex))


# === Сужение на подпространство ===

def _compress(basis: np.ndarray, rows: np.ndarray, tol: float) -> np.ndarray:
    """
    Базис образа S† P S, где S выбирает координаты rows.

    P обязан коммутировать с проектором на подпространство: тогда
    сингулярные числа S†B равны 0 или 1.
    """
    sub = basis[rows, :]
    if sub.shape[1] == 0:
        return sub
    u, s, _ = np.linalg.svd(sub, full_matrices=False)
    leak = float(np.max(np.minimum(s, np.abs(1 - s))))
    if leak > tol:
        raise NonCommuting(
            "Элемент огрубления выводит из подпространства",
            details={"leak": leak}
        )
    return u[:, s > 0.5]


def restrict_coarse_graining(
    cg: CoarseGraining, rows: Sequence[int], tol: float = 1e-8
) -> CoarseGraining:
    """Сужение огрубления, коммутирующего с координатным подпространством rows"""
    rows = np.asarray(rows, dtype=int)
    bases, labels = [], []
    for p, label in zip(cg.elements, cg.labels):
        b = _compress(p.basis, rows, tol)
        if b.shape[1]:
            bases.append(b)
            labels.append(label)
    return CoarseGraining.from_bases(bases, labels)


# === Тензорные произведения ===

def tensor_product_coarse_graining(
    parts: Sequence[CoarseGraining],
    space: TensorSpace,
    within: Optional[Sequence[int]] = None
) -> CoarseGraining:
    """
    C_A ⊗ C_B ⊗ ... ⊗ C_C = {P_l ⊗ P_m ⊗ ... ⊗ P_n} с составными метками (l, m, ..., n).

    within - необязательный список координат подпространства (например,
    сектора с фиксированным числом частиц), на которое сразу сужается
    каждый элемент произведения.
    """
    if len(parts) != space.count:
        raise DimensionMismatch(
            "Число частей не совпадает с числом подсистем",
            details={"parts": len(parts), "subsystems": space.count}
        )
    for k, (part, dim) in enumerate(zip(parts, space.subsystem_dims)):
        if part.dim != dim:
            raise DimensionMismatch(
                f"Размерность огрубления подсистемы {k} не совпадает с пространством",
                details={"part_dim": part.dim, "subsystem_dim": dim}
            )
    rows = None if within is None else np.asarray(within, dtype=int)

    bases, labels = [], []
    for combo in itertools.product(*(range(len(p)) for p in parts)):
        basis = kron_all([parts[k].elements[i].basis for k, i in enumerate(combo)])
        if rows is not None:
            basis = _compress(basis, rows, 1e-8)
            if basis.shape[1] == 0:
                continue
        bases.append(basis)
        labels.append(tuple(parts[k].labels[i] for k, i in enumerate(combo)))

    logger.debug(f"Произведение огрублений: {len(bases)} элементов")
    return CoarseGraining.from_bases(bases, labels)


def lift_coarse_graining(cg: CoarseGraining, space: TensorSpace, k: int) -> CoarseGraining:
    """C_I ⊗ ... ⊗ C ⊗ ... ⊗ C_I с огрублением C на подсистеме k"""
    parts = [
        cg if j == k else trivial_coarse_graining(d)
        for j, d in enumerate(space.subsystem_dims)
    ]
    return tensor_product_coarse_graining(parts, space)


# === Совместное огрубление ===

def joint_coarse_graining(
    a: CoarseGraining, b: CoarseGraining, tol: float = 1e-10
) -> CoarseGraining:
    """
    Совместное огрубление {P_i Q_j} двух коммутирующих огрублений.

    Для некоммутирующих огрублений совместного огрубления не существует.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(
            "Огрубления действуют в разных пространствах",
            details={"a": a.dim, "b": b.dim}
        )
    bases, labels = [], []
    worst = 0.0
    for p, la in zip(a.elements, a.labels):
        for q, lb in zip(b.elements, b.labels):
            overlap = p.basis.conj().T @ q.basis
            # ||[P, Q]|| = ||(I - P) Q P||
            outside = q.basis - p.basis @ overlap
            norm = float(np.linalg.norm(outside @ overlap.conj().T, 2)) if overlap.size else 0.0
            worst = max(worst, norm)
            if norm > tol:
                continue
            u, s, _ = np.linalg.svd(overlap, full_matrices=False)
            keep = s > 0.5
            if keep.any():
                bases.append(p.basis @ u[:, keep])
                labels.append((la, lb))
    if worst > tol:
        raise NonCommuting(
            "Совместное огрубление существует только для коммутирующих огрублений",
            details={"commutator_norm": worst}
        )
    return CoarseGraining.from_bases(bases, labels)


# === Состояния ===

def partial_trace(state: QuantumState, space: TensorSpace, keep: Sequence[int]) -> QuantumState:
    """Приведенное состояние подсистем keep"""
    if state.dim != space.total_dim:
        raise DimensionMismatch(
            "Размерность состояния не совпадает с пространством",
            details={"state_dim": state.dim, "total_dim": space.total_dim}
        )
    reduced = _partial_trace(state.matrix, space.subsystem_dims, keep)
    return QuantumState(hermitize(reduced), validate=False)


def product_state(states: Sequence[QuantumState]) -> QuantumState:
    return QuantumState(kron_all([s.matrix for s in states]), validate=False)


# === Диагностика для команды validate ===

def state_checks(matrix: np.ndarray) -> List[Dict]:
    """Проверки инвариантов матрицы плотности с измеренными невязками"""
    herm = hermitian_residual(matrix)
    trace = float(abs(np.trace(matrix) - 1))
    min_eig = float(linalg.eigvalsh(hermitize(matrix)).min())
    return [
        {"check": "hermitian", "passed": herm <= settings.HERMITIAN_TOL, "residual": herm},
        {"check": "unit_trace", "passed": trace <= settings.TRACE_TOL, "residual": trace},
        {"check": "positive_semidefinite", "passed": min_eig >= -settings.PSD_TOL, "residual": min_eig},
    ]


def observable_checks(matrix: np.ndarray) -> List[Dict]:
    herm = hermitian_residual(matrix)
    return [{"check": "hermitian", "passed": herm <= settings.HERMITIAN_TOL, "residual": herm}]


def projector_set_checks(matrices: Sequence[np.ndarray]) -> List[Dict]:
    """Проверки набора проекторов: P² = P = P†, целые объемы, ортогональность, полнота"""
    results = []
    dim = matrices[0].shape[0]
    for k, p in enumerate(matrices):
        herm = hermitian_residual(p)
        idem = float(np.max(np.abs(p @ p - p)))
        volume = float(np.trace(p).real)
        frac = abs(volume - round(volume))
        results.append({"check": f"projector[{k}].hermitian", "passed": herm <= settings.PROJECTOR_TOL, "residual": herm})
        results.append({"check": f"projector[{k}].idempotent", "passed": idem <= settings.PROJECTOR_TOL, "residual": idem})
        results.append({"check": f"projector[{k}].integer_volume", "passed": frac <= settings.VOLUME_INTEGER_TOL, "residual": frac})
    overlap = 0.0
    for i in range(len(matrices)):
        for j in range(i + 1, len(matrices)):
            overlap = max(overlap, float(np.max(np.abs(matrices[i] @ matrices[j]))))
    completeness = identity_residual(sum(matrices)) if dim else 0.0
    results.append({"check": "orthogonality", "passed": overlap <= settings.COMPLETENESS_TOL, "residual": overlap})
    results.append({"check": "completeness", "passed": completeness <= settings.COMPLETENESS_TOL, "residual": completeness})
    return results


def kraus_checks(operators: Sequence[np.ndarray]) -> List[Dict]:
    residual = identity_residual(sum(k.conj().T @ k for k in operators))
    return [{"check": "trace_preserving", "passed": residual <= settings.COMPLETENESS_TOL, "residual": residual}]
