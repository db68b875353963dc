from typing import Any, List, Optional
from pydantic import BaseModel, Field, field_validator, model_validator
import numpy as np


class MatrixData(BaseModel):
    """Комплексная матрица: действительная и (необязательная) мнимая части"""
    re: List[List[float]]
    im: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def check_shape(self) -> "MatrixData":
        rows = len(self.re)
        if rows == 0:
            raise ValueError("Пустая матрица")
        width = len(self.re[0])
        if any(len(r) != width for r in self.re):
            raise ValueError("Строки матрицы разной длины")
        if self.im is not None:
            if len(self.im) != rows or any(len(r) != width for r in self.im):
                raise ValueError("Формы re и im не совпадают")
        return self

    def to_array(self) -> np.ndarray:
        re = np.array(self.re, dtype=float)
        im = np.zeros_like(re) if self.im is None else np.array(self.im, dtype=float)
        return re + 1j * im

    @classmethod
    def from_array(cls, matrix: np.ndarray) -> "MatrixData":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(re=matrix.real.tolist(), im=matrix.imag.tolist())


class MatrixFile(MatrixData):
    """Файл состояния или наблюдаемой"""
    dim: int = Field(..., ge=1)
    type: str = "state"

    @field_validator("type")
    @classmethod
    def validate_type(cls, v: str) -> str:
        if v not in ("state", "observable"):
            raise ValueError("type должен быть state или observable")
        return v

    @model_validator(mode="after")
    def check_dim(self) -> "MatrixFile":
        if len(self.re) != self.dim or len(self.re[0]) != self.dim:
            raise ValueError(f"Ожидалась матрица {self.dim}×{self.dim}")
        return self


class CoarseGrainingFile(BaseModel):
    """Файл огрубления: проекторы (kind=projective) или операторы Крауса (kind=kraus)"""
    dim: int = Field(..., ge=1)
    kind: str = "projective"
    elements: List[MatrixData]
    labels: Optional[List[Any]] = None

    @field_validator("kind")
    @classmethod
    def validate_kind(cls, v: str) -> str:
        if v not in ("projective", "kraus"):
            raise ValueError("kind должен быть projective или kraus")
        return v

    @model_validator(mode="after")
    def check_elements(self) -> "CoarseGrainingFile":
        if not self.elements:
            raise ValueError("Огрубление не содержит элементов")
        for k, e in enumerate(self.elements):
            if len(e.re) != self.dim or len(e.re[0]) != self.dim:
                raise ValueError(f"Элемент {k}: ожидалась матрица {self.dim}×{self.dim}")
        if self.labels is not None and len(self.labels) != len(self.elements):
            raise ValueError("Число меток не совпадает с числом элементов")
        return self


class ClassicalSpaceFile(BaseModel):
    points: List[Any]
    weights: Optional[List[float]] = None
    density: List[float]

    @model_validator(mode="after")
    def check_lengths(self) -> "ClassicalSpaceFile":
        n = len(self.points)
        if len(self.density) != n or (self.weights is not None and len(self.weights) != n):
            raise ValueError("Длины points, weights и density не совпадают")
        return self


class ClassicalCoarseGrainingFile(BaseModel):
    cells: List[List[int]]
    labels: Optional[List[Any]] = None
