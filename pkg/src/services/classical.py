"""
Классическая наблюдательная энтропия на конечном (взвешенном) пространстве.

Классические огрубления всегда коммутируют, поэтому последовательность
огрублений сводится к одному разбиению пересечениями ячеек.
"""
from dataclasses import dataclass
import itertools
from typing import Callable, Hashable, List, Sequence, Tuple
import numpy as np
from scipy import special

from src.core.config import settings
from src.core.exceptions import NotADensity, PartitionMismatch, ZeroDensity
from src.models.classical import ClassicalCoarseGraining, ClassicalSpace, PhaseSpaceGrid
from src.models.hilbert import CoarseGraining, QuantumState
from src.utils.logger import classical_logger as logger


@dataclass(frozen=True)
class ClassicalMacrostates:
    """Ячейки разбиения-пересечения с вероятностями и объемами"""
    labels: Tuple[Tuple[Hashable, ...], ...]
    probabilities: np.ndarray
    volumes: np.ndarray
    total_measure: float


def cell_assignment(space: ClassicalSpace, cg: ClassicalCoarseGraining) -> np.ndarray:
    """Номер ячейки для каждой точки; проверка, что cg - разбиение Γ"""
    assignment = np.full(space.size, -1, dtype=int)
    for k, cell in enumerate(cg.cells):
        for i in cell:
            if i < 0 or i >= space.size:
                raise PartitionMismatch(
                    "Ячейка ссылается на несуществующую точку",
                    details={"cell": k, "point": i}
                )
            if assignment[i] != -1:
                raise PartitionMismatch(
                    "Ячейки огрубления пересекаются",
                    details={"point": i, "cells": [int(assignment[i]), k]}
                )
            assignment[i] = k
    uncovered = np.flatnonzero(assignment < 0)
    if uncovered.size:
        raise PartitionMismatch(
            "Ячейки огрубления не покрывают пространство",
            details={"uncovered": uncovered[:10].tolist()}
        )
    return assignment


def classical_macrostate_distribution(
    space: ClassicalSpace, cgs: Sequence[ClassicalCoarseGraining]
) -> ClassicalMacrostates:
    """p_i = Σ_{γ∈P_i} ρ_γ w_γ, V_i = Σ_{γ∈P_i} w_γ по разбиению-пересечению"""
    if not cgs:
        return ClassicalMacrostates(
            ((),), np.array([float(np.dot(space.density, space.weights))]),
            np.array([space.total_measure]), space.total_measure
        )
    columns = np.stack([cell_assignment(space, cg) for cg in cgs], axis=1)
    keys, inverse = np.unique(columns, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    probabilities = np.bincount(inverse, weights=space.density * space.weights, minlength=len(keys))
    volumes = np.bincount(inverse, weights=space.weights, minlength=len(keys))
    labels = tuple(
        tuple(cg.labels[k] for cg, k in zip(cgs, row)) for row in keys
    )
    logger.debug(f"Точек={space.size}, огрублений={len(cgs)}, ячеек пересечения={len(keys)}")
    return ClassicalMacrostates(labels, probabilities, volumes, space.total_measure)


def classical_observational_entropy(
    space: ClassicalSpace, cgs: Sequence[ClassicalCoarseGraining]
) -> float:
    """S^class = -Σ p_i ln(p_i / V_i); не зависит от порядка огрублений"""
    macro = classical_macrostate_distribution(space, cgs)
    return float(-special.rel_entr(macro.probabilities, macro.volumes).sum())


def gibbs_entropy(space: ClassicalSpace) -> float:
    """S_G = -Σ_γ ρ_γ ln ρ_γ w_γ"""
    if np.any(space.density < 0):
        raise NotADensity("Плотность не может быть отрицательной")
    return float(np.dot(special.entr(space.density), space.weights))


def classical_kl_identity(
    space: ClassicalSpace, cgs: Sequence[ClassicalCoarseGraining]
) -> Tuple[float, float, float]:
    """S = ln W - D_KL(p || V/W); возвращает (энтропия, расхождение, невязка)"""
    macro = classical_macrostate_distribution(space, cgs)
    entropy = float(-special.rel_entr(macro.probabilities, macro.volumes).sum())
    kl = float(special.rel_entr(macro.probabilities, macro.volumes / macro.total_measure).sum())
    residual = abs(entropy - (np.log(macro.total_measure) - kl))
    return entropy, kl, float(residual)


def build_phase_space(
    grid: PhaseSpaceGrid, density_sampler: Callable[[Tuple[float, ...]], float]
) -> ClassicalSpace:
    """
    Дискретизация фазового пространства: одна точка на ячейку (центр ячейки).

    Вес точки - мера ячейки / h^{3N}; плотность перенормируется так, что
    Σ ρ_γ w_γ = 1.
    """
    centers = [
        lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi, n in grid.axes
    ]
    points = list(itertools.product(*(c.tolist() for c in centers)))
    weight = grid.cell_measure
    raw = np.array([float(density_sampler(p)) for p in points])
    if np.any(raw < 0):
        raise NotADensity("Плотность не может быть отрицательной")
    total = float(raw.sum()) * weight
    if total <= 0:
        raise ZeroDensity("Плотность на сетке тождественно равна нулю")
    weights = np.full(len(points), weight)
    logger.info(f"Фазовое пространство: {len(points)} ячеек, мера ячейки={weight:.6g}")
    return ClassicalSpace(tuple(points), weights, raw / total, validate=False)


# === Соответствие с квантовым случаем ===

def induced_classical_space(state: QuantumState, tol: float = None) -> ClassicalSpace:
    """Диагональная матрица плотности -> пространство с единичными весами"""
    tol = settings.HERMITIAN_TOL if tol is None else tol
    off_diagonal = float(np.max(np.abs(state.matrix - np.diag(np.diag(state.matrix)))))
    if off_diagonal > tol:
        raise NotADensity(
            "Состояние не диагонально в вычислительном базисе",
            details={"off_diagonal": off_diagonal}
        )
    density = np.clip(np.real(np.diag(state.matrix)), 0.0, None)
    return ClassicalSpace(tuple(range(state.dim)), np.ones(state.dim), density / density.sum())


def induced_classical_coarse_graining(cg: CoarseGraining, tol: float = 1e-10) -> ClassicalCoarseGraining:
    """Диагональное проекционное огрубление -> разбиение индексов базиса"""
    cells: List[Tuple[int, ...]] = []
    for element in cg.elements:
        p = element.matrix
        diagonal = np.real(np.diag(p))
        off = float(np.max(np.abs(p - np.diag(np.diag(p)))))
        if off > tol:
            raise PartitionMismatch(
                "Проектор не диагонален в вычислительном базисе",
                details={"off_diagonal": off}
            )
        cells.append(tuple(np.flatnonzero(diagonal > 0.5).tolist()))
    return ClassicalCoarseGraining(tuple(cells), cg.labels)
