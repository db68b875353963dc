from dataclasses import dataclass, InitVar
from typing import Hashable, Optional, Sequence, Tuple
import numpy as np

from src.core.config import settings
from src.core.exceptions import ConfigError, NotADensity, PartitionMismatch


@dataclass(frozen=True, eq=False)
class ClassicalSpace:
    """
    Пространство Γ с мерой dγ (вес точки) и распределением ρ_γ.

    Нормировка: Σ_γ ρ_γ · weight_γ = 1.
    """
    points: Tuple[Hashable, ...]
    weights: np.ndarray
    density: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        points = tuple(self.points)
        weights = np.array(self.weights, dtype=float)
        density = np.array(self.density, dtype=float)
        if weights.shape != (len(points),) or density.shape != (len(points),):
            raise NotADensity(
                "Длины points, weights и density не совпадают",
                details={"points": len(points), "weights": weights.shape, "density": density.shape}
            )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "density", density)
        if not validate:
            return
        if not points:
            raise NotADensity("Пространство не содержит точек")
        if np.any(weights <= 0):
            raise NotADensity("Веса точек должны быть положительны")
        if np.any(density < 0):
            raise NotADensity("Плотность не может быть отрицательной")
        total = float(np.dot(density, weights))
        if abs(total - 1) > settings.TRACE_TOL:
            raise NotADensity(
                "Распределение не нормировано",
                details={"total_probability": total}
            )

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def uniform(cls, size: int) -> "ClassicalSpace":
        return cls(tuple(range(size)), np.ones(size), np.full(size, 1.0 / size))


@dataclass(frozen=True, eq=False)
class ClassicalCoarseGraining:
    """Разбиение Γ на непересекающиеся ячейки (индексы точек)"""
    cells: Tuple[Tuple[int, ...], ...]
    labels: Tuple[Hashable, ...] = ()

    def __post_init__(self) -> None:
        cells = tuple(tuple(int(i) for i in cell) for cell in self.cells)
        labels = tuple(self.labels) if self.labels else tuple(range(len(cells)))
        if len(labels) != len(cells):
            raise PartitionMismatch(
                "Число меток не совпадает с числом ячеек",
                details={"cells": len(cells), "labels": len(labels)}
            )
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.cells)

    @classmethod
    def from_assignment(cls, assignment: Sequence[Hashable]) -> "ClassicalCoarseGraining":
        """Ячейки по меткам точек: точки с одинаковой меткой попадают в одну ячейку"""
        labels = sorted(set(assignment), key=repr)
        cells = [tuple(i for i, a in enumerate(assignment) if a == label) for label in labels]
        return cls(tuple(cells), tuple(labels))


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """
    Регулярная сетка фазового пространства N частиц.

    axes - (нижняя граница, верхняя граница, число корзин) для каждой
    координаты/импульса; мера ячейки нормируется на h^{3N}.
    """
    particle_count: int
    axes: Tuple[Tuple[float, float, int], ...]
    planck_constant: Optional[float] = None

    def __post_init__(self) -> None:
        h = settings.PLANCK_CONSTANT if self.planck_constant is None else self.planck_constant
        object.__setattr__(self, "planck_constant", float(h))
        axes = tuple((float(lo), float(hi), int(n)) for lo, hi, n in self.axes)
        object.__setattr__(self, "axes", axes)
        if self.particle_count < 1:
            raise ConfigError("Число частиц должно быть положительным")
        if self.planck_constant <= 0:
            raise ConfigError("Постоянная Планка должна быть положительной")
        if not axes:
            raise ConfigError("Сетка не содержит осей")
        for lo, hi, n in axes:
            if n < 1 or hi <= lo:
                raise ConfigError(
                    "Ось сетки должна иметь hi > lo и не менее одной корзины",
                    details={"axis": [lo, hi, n]}
                )

    @property
    def widths(self) -> Tuple[float, ...]:
        return tuple((hi - lo) / n for lo, hi, n in self.axes)

    @property
    def cell_measure(self) -> float:
        """Мера ячейки: Π ширин / h^{3N}"""
        return float(np.prod(self.widths)) / self.planck_constant ** (3 * self.particle_count)
