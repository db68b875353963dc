from dataclasses import dataclass
from typing import Sequence, Tuple, Union
import numpy as np

from src.core.exceptions import DimensionMismatch, InvalidCoarseGraining
from src.models.hilbert import CoarseGraining, KrausCoarseGraining, Label

Step = Union[CoarseGraining, KrausCoarseGraining]


@dataclass(frozen=True, eq=False)
class MeasurementSequence:
    """Упорядоченная последовательность огрублений (C_1, ..., C_n); C_1 измеряется первым"""
    steps: Tuple[Step, ...]

    def __post_init__(self) -> None:
        steps = tuple(self.steps)
        if not steps:
            raise InvalidCoarseGraining("Последовательность измерений пуста")
        dims = {s.dim for s in steps}
        if len(dims) != 1:
            raise DimensionMismatch(
                "Огрубления последовательности действуют в разных пространствах",
                details={"dims": sorted(dims)}
            )
        object.__setattr__(self, "steps", steps)

    @classmethod
    def of(cls, *steps: Step) -> "MeasurementSequence":
        return cls(tuple(steps))

    @property
    def dim(self) -> int:
        return self.steps[0].dim

    @property
    def is_projective(self) -> bool:
        return all(isinstance(s, CoarseGraining) for s in self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def extended(self, *steps: Step) -> "MeasurementSequence":
        return MeasurementSequence(self.steps + tuple(steps))


@dataclass(frozen=True)
class MacrostateRecord:
    """Мульти-макросостояние i = (i_1, ..., i_n) с вероятностью p_i и объемом V_i"""
    multi_index: Tuple[Label, ...]
    probability: float
    volume: float


@dataclass(frozen=True)
class MacrostateDistribution:
    records: Tuple[MacrostateRecord, ...]
    dim: int

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([r.probability for r in self.records])

    @property
    def volumes(self) -> np.ndarray:
        return np.array([r.volume for r in self.records])

    def __len__(self) -> int:
        return len(self.records)

    def by_index(self) -> dict:
        return {r.multi_index: r for r in self.records}


def as_sequence(value: Union[Step, MeasurementSequence, Sequence[Step]]) -> MeasurementSequence:
    """Одиночное огрубление или список огрублений -> MeasurementSequence"""
    if isinstance(value, MeasurementSequence):
        return value
    if isinstance(value, (CoarseGraining, KrausCoarseGraining)):
        return MeasurementSequence((value,))
    return MeasurementSequence(tuple(value))
