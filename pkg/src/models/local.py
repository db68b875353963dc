from dataclasses import dataclass
from typing import Tuple

from src.core.exceptions import DimensionMismatch
from src.models.hilbert import CoarseGraining, TensorSpace


@dataclass(frozen=True, eq=False)
class ProductMeasurement:
    """Локальные огрубления C_A ⊗ C_B ⊗ ... ⊗ C_C, по одному на подсистему"""
    space: TensorSpace
    local_cgs: Tuple[CoarseGraining, ...]

    def __post_init__(self) -> None:
        local_cgs = tuple(self.local_cgs)
        object.__setattr__(self, "local_cgs", local_cgs)
        if len(local_cgs) != self.space.count:
            raise DimensionMismatch(
                "Число локальных огрублений не совпадает с числом подсистем",
                details={"local_cgs": len(local_cgs), "subsystems": self.space.count}
            )
        for k, (cg, dim) in enumerate(zip(local_cgs, self.space.subsystem_dims)):
            if cg.dim != dim:
                raise DimensionMismatch(
                    f"Огрубление подсистемы {k} имеет неверную размерность",
                    details={"cg_dim": cg.dim, "subsystem_dim": dim}
                )


@dataclass(frozen=True)
class QceTraceEntry:
    """Один запуск оптимизатора: номер, число проходов, достигнутое S и история"""
    restart: int
    iterations: int
    achieved: float
    history: Tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class QceResult:
    """
    Энтропия квантовых корреляций S^qc.

    value - лучшая найденная разность S - S_vN, т.е. верхняя оценка
    точной нижней грани, а не сертификат глобального оптимума.
    """
    value: float
    best_measurement: ProductMeasurement
    optimizer_trace: Tuple[QceTraceEntry, ...]
    certificate_gap: float
    achieved_entropy: float
    von_neumann: float
    best_restart: int
