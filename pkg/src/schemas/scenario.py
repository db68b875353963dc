import math
from typing import List, Optional, Union
import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

ENTROPY_IDS = ("1a", "1b", "1c", "2a", "2b", "2c", "3a", "3b", "4")


class TimeGrid(BaseModel):
    """Равномерная сетка времен: num точек от start до stop включительно"""
    start: float = Field(0.0, ge=0)
    stop: float = Field(..., ge=0)
    num: int = Field(..., ge=1)

    def values(self) -> List[float]:
        if self.num == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.num - 1)
        return [self.start + k * step for k in range(self.num)]


class ModelConfig(BaseModel):
    """Параметры цепочки жестких бозонов"""
    sites: int = Field(..., ge=1)
    particles: Optional[int] = Field(None, ge=0)
    hopping: float = 1.0
    hopping_nnn: float = 0.0
    interaction: float = 0.0
    potentials: Optional[List[float]] = None
    # число ячеек (равное разбиение) или размеры ячеек слева направо
    cells: Union[int, List[int]] = 1

    @model_validator(mode="after")
    def check_geometry(self) -> "ModelConfig":
        if self.particles is not None and self.particles > self.sites:
            raise ValueError("Число частиц больше числа узлов")
        if self.potentials is not None and len(self.potentials) != self.sites:
            raise ValueError("Длина potentials должна совпадать с числом узлов")
        if isinstance(self.cells, int):
            if not 1 <= self.cells <= self.sites:
                raise ValueError("Число ячеек должно быть от 1 до числа узлов")
        else:
            if not self.cells or any(c < 1 for c in self.cells):
                raise ValueError("Ячейки должны быть непустыми")
            if sum(self.cells) != self.sites:
                raise ValueError("Сумма размеров ячеек должна совпадать с числом узлов")
        return self

    def sector_dim(self) -> int:
        """Размерность пространства модели: сектор с particles частицами или все 2^L"""
        if self.particles is None:
            return 2 ** self.sites
        return math.comb(self.sites, self.particles)

    def cell_sizes(self) -> List[int]:
        if isinstance(self.cells, list):
            return list(self.cells)
        base, extra = divmod(self.sites, self.cells)
        return [base + (1 if k < extra else 0) for k in range(self.cells)]


class ScenarioConfig(BaseModel):
    """Сценарий квенча: модель, начальное состояние, сетка времен и набор энтропий"""
    model: ModelConfig
    initial_state: str = Field(..., description="Строка заполнений, узел 0 слева")
    times: Union[List[float], TimeGrid]
    delta_e: Optional[float] = Field(None, ge=0)
    entropies: List[str] = Field(default_factory=lambda: list(ENTROPY_IDS))
    # случайные потенциалы на узлах из [-disorder, disorder], генератор от seed
    disorder: float = Field(0.0, ge=0)
    seed: int = 0
    system_cell: int = Field(0, ge=0)
    system_cg: Optional[str] = None

    @field_validator("initial_state")
    @classmethod
    def validate_occupation(cls, v: str) -> str:
        if not v or set(v) - {"0", "1"}:
            raise ValueError("Строка заполнений должна состоять из 0 и 1")
        return v

    @field_validator("entropies")
    @classmethod
    def validate_entropies(cls, v: List[str]) -> List[str]:
        unknown = [e for e in v if e not in ENTROPY_IDS]
        if unknown:
            raise ValueError(f"Неизвестные энтропии: {unknown}")
        if not v:
            raise ValueError("Набор энтропий пуст")
        # канонический порядок без повторов
        return [e for e in ENTROPY_IDS if e in v]

    @model_validator(mode="after")
    def check_consistency(self) -> "ScenarioConfig":
        if len(self.initial_state) != self.model.sites:
            raise ValueError("Длина строки заполнений не совпадает с числом узлов")
        if self.disorder > 0 and self.model.potentials is not None:
            raise ValueError("disorder и явные potentials несовместимы")
        times = self.time_values()
        if any(t < 0 for t in times):
            raise ValueError("Времена должны быть неотрицательными")
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("Времена должны идти по возрастанию")
        return self

    def resolved_model(self) -> ModelConfig:
        """Параметры модели с потенциалами беспорядка (воспроизводимо при том же seed)"""
        if self.disorder == 0:
            return self.model
        rng = np.random.default_rng(self.seed)
        potentials = rng.uniform(-self.disorder, self.disorder, size=self.model.sites)
        return self.model.model_copy(update={"potentials": potentials.tolist()})

    def time_values(self) -> List[float]:
        if isinstance(self.times, TimeGrid):
            return self.times.values()
        return [float(t) for t in self.times]
