import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Tuple
import numpy as np
import pandas as pd

from src.models.hilbert import CoarseGraining, QuantumState, TensorSpace
from src.utils.linalg import block_eigh


@dataclass(frozen=True, eq=False)
class LatticeModel:
    """
    Цепочка жестких бозонов с открытыми границами.

    Базис - конфигурации заполнений (целые числа, узел 0 - старший бит),
    при заданном particles - только сектор с этим числом частиц.
    Строки полного фоковского пространства совпадают с самими
    конфигурациями, поэтому сектор задается списком configurations.
    """
    sites: int
    particles: Optional[int]
    hopping: float
    hopping_nnn: float
    interaction: float
    potentials: Tuple[float, ...]
    cells: Tuple[Tuple[int, ...], ...]
    configurations: np.ndarray
    hamiltonian: np.ndarray
    boundary: np.ndarray
    local_hamiltonians: Tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return len(self.configurations)

    @property
    def cell_volumes(self) -> Tuple[int, ...]:
        """𝒱_i - число узлов в ячейке"""
        return tuple(len(c) for c in self.cells)

    @property
    def cell_space(self) -> TensorSpace:
        return TensorSpace(tuple(2 ** v for v in self.cell_volumes))

    @property
    def integrable(self) -> bool:
        return self.hopping_nnn == 0 and self.interaction == 0

    @cached_property
    def particle_counts(self) -> np.ndarray:
        """Собственные значения N̂ в базисе конфигураций"""
        return np.array([bin(int(c)).count("1") for c in self.configurations])

    @property
    def number_operator(self) -> np.ndarray:
        return np.diag(self.particle_counts.astype(float))

    @cached_property
    def local_particle_counts(self) -> Tuple[np.ndarray, ...]:
        """Собственные значения N̂_i в фоковском базисе ячейки"""
        return tuple(
            np.array([bin(k).count("1") for k in range(2 ** v)]) for v in self.cell_volumes
        )

    @cached_property
    def spectrum(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(E_a, |E_a⟩, n_a): собственные векторы с определенным числом частиц"""
        values, vectors, owners = block_eigh(self.hamiltonian, self.particle_counts)
        for a in (values, vectors, owners):
            a.setflags(write=False)
        return values, vectors, owners

    @cached_property
    def boundary_norm(self) -> float:
        return float(np.linalg.norm(self.boundary, 2)) if self.boundary.size else 0.0

    def metadata(self) -> Dict:
        return {
            "sites": self.sites,
            "particles": self.particles,
            "hopping": self.hopping,
            "hopping_nnn": self.hopping_nnn,
            "interaction": self.interaction,
            "potentials": list(self.potentials),
            "cells": [list(c) for c in self.cells],
            "dim": self.dim,
            "integrable": self.integrable,
            "boundary_norm": self.boundary_norm,
        }


class EnsembleKind(str, enum.Enum):
    MICROCANONICAL = "microcanonical"
    VOLUME_MICROCANONICAL = "volume_microcanonical"
    CANONICAL = "canonical"
    GRANDCANONICAL = "grandcanonical"


@dataclass(frozen=True)
class EnsembleSpec:
    """
    Параметры ансамбля.

    microcanonical: energy, width; volume_microcanonical: energy;
    canonical: beta; grandcanonical: beta, mu. Окно microcanonical задается
    в абсолютной энергии, energy объемного ансамбля отсчитывается от
    основного состояния.
    """
    kind: EnsembleKind
    energy: Optional[float] = None
    width: Optional[float] = None
    beta: Optional[float] = None
    mu: Optional[float] = None


@dataclass(frozen=True, eq=False)
class QuenchScenario:
    model: LatticeModel
    initial_state: QuantumState
    times: Tuple[float, ...]
    delta_e: Optional[float] = None
    entropies: Tuple[str, ...] = ("1a", "1b", "1c", "2a", "2b", "2c", "3a", "3b", "4")
    system_cg: Optional[CoarseGraining] = None
    system_cell: int = 0


@dataclass
class QuenchResult:
    """Таблица (t, entropy_id, value) и метаданные запуска"""
    table: pd.DataFrame
    metadata: Dict = field(default_factory=dict)
