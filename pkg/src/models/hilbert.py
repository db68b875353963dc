"""
Конечномерные гильбертовы пространства: состояния, наблюдаемые и огрубления.

Все объекты неизменяемы после создания; проверки инвариантов выполняются
в конструкторе (их можно отключить флагом validate=False для объектов,
корректных по построению).
"""
from dataclasses import dataclass, field, InitVar
from functools import cached_property
from typing import Any, Hashable, Optional, Sequence, Tuple
import numpy as np
from scipy import linalg

from src.core.config import settings
from src.core.exceptions import (
    InvalidCoarseGraining, NonHermitian, NotAProjector, NotAState,
    NotTracePreserving, DimensionMismatch
)
from src.utils.linalg import (
    as_complex_matrix, hermitian_residual, hermitize, identity_residual, orthonormalize,
    split_columns
)
from src.utils.logger import hilbert_logger as logger

Label = Hashable


@dataclass(frozen=True, eq=False)
class QuantumState:
    """
    Матрица плотности ρ.

    vector - нормированный |ψ⟩ для чистых состояний (ρ = |ψ⟩⟨ψ|), если известен;
    вычисления вероятностей тогда идут по вектору, а не по матрице.
    """
    matrix: np.ndarray
    vector: Optional[np.ndarray] = field(default=None, repr=False)
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        try:
            matrix = as_complex_matrix(self.matrix)
        except ValueError as e:
            raise NotAState(str(e))
        object.__setattr__(self, "matrix", matrix)
        matrix.setflags(write=False)
        if self.vector is not None:
            vector = np.array(self.vector, dtype=complex).ravel()
            if vector.size != matrix.shape[0]:
                raise NotAState("Размерность вектора не совпадает с матрицей плотности")
            vector.setflags(write=False)
            object.__setattr__(self, "vector", vector)
        if validate:
            checks = self.residuals()
            if checks["hermitian"] > settings.HERMITIAN_TOL:
                raise NotAState("Матрица плотности не эрмитова", details=checks)
            if checks["trace"] > settings.TRACE_TOL:
                raise NotAState("След матрицы плотности не равен 1", details=checks)
            if checks["min_eigenvalue"] < -settings.PSD_TOL:
                raise NotAState("Матрица плотности не положительна", details=checks)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def residuals(self) -> dict:
        """Измеренные невязки инвариантов состояния"""
        herm = hermitian_residual(self.matrix)
        trace = abs(np.trace(self.matrix) - 1)
        min_eig = float(linalg.eigvalsh(hermitize(self.matrix)).min())
        return {"hermitian": herm, "trace": float(trace), "min_eigenvalue": min_eig}

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)

    @classmethod
    def from_vector(cls, vector: Sequence[complex]) -> "QuantumState":
        """Чистое состояние |ψ⟩⟨ψ| (вектор нормируется)"""
        psi = np.asarray(vector, dtype=complex).ravel()
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise NotAState("Нулевой вектор состояния")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()), vector=psi, validate=False)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "QuantumState":
        return cls(np.eye(dim, dtype=complex) / dim, validate=False)


@dataclass(frozen=True, eq=False)
class Observable:
    """Эрмитова наблюдаемая Â"""
    matrix: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        try:
            matrix = as_complex_matrix(self.matrix)
        except ValueError as e:
            raise NonHermitian(str(e))
        object.__setattr__(self, "matrix", matrix)
        matrix.setflags(write=False)
        if validate:
            residual = hermitian_residual(matrix)
            if residual > settings.HERMITIAN_TOL:
                raise NonHermitian(
                    "Наблюдаемая не эрмитова",
                    details={"hermitian": residual}
                )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Projector:
    """
    Ортогональный проектор P = B B†.

    Хранится ортонормированный базис образа B (dim × rank); плотная матрица
    вычисляется по требованию.
    """
    basis: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        basis = np.asarray(self.basis, dtype=complex)
        if basis.ndim != 2:
            raise NotAProjector(f"Базис проектора должен быть матрицей, получено {basis.shape}")
        object.__setattr__(self, "basis", basis)
        if validate and basis.shape[1]:
            residual = identity_residual(basis.conj().T @ basis)
            if residual > settings.PROJECTOR_TOL:
                raise NotAProjector(
                    "Базис проектора не ортонормирован",
                    details={"isometry": residual}
                )

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def volume(self) -> float:
        """V = tr P"""
        return float(self.rank)

    @cached_property
    def matrix(self) -> np.ndarray:
        m = self.basis @ self.basis.conj().T
        m.setflags(write=False)
        return m

    @classmethod
    def from_matrix(cls, matrix, tol: Optional[float] = None) -> "Projector":
        """Проектор из плотной матрицы с проверкой P² = P = P†"""
        tol = settings.PROJECTOR_TOL if tol is None else tol
        try:
            p = as_complex_matrix(matrix)
        except ValueError as e:
            raise NotAProjector(str(e))
        herm = hermitian_residual(p)
        idem = float(np.max(np.abs(p @ p - p))) if p.size else 0.0
        if herm > tol or idem > tol:
            raise NotAProjector(
                "Матрица не является ортогональным проектором",
                details={"hermitian": herm, "idempotent": idem}
            )
        values, vectors = linalg.eigh((p + p.conj().T) / 2)
        basis = vectors[:, values > 0.5]
        volume = float(np.trace(p).real)
        if abs(volume - round(volume)) > settings.VOLUME_INTEGER_TOL:
            raise NotAProjector(
                "След проектора не целый",
                details={"volume": volume}
            )
        return cls(basis, validate=False)


def _stacked_residual(bases: Sequence[np.ndarray], dim: int) -> Tuple[int, float]:
    stacked = np.hstack(bases) if bases else np.zeros((dim, 0), dtype=complex)
    gram = stacked.conj().T @ stacked
    return stacked.shape[1], identity_residual(gram)


@dataclass(frozen=True, eq=False)
class CoarseGraining:
    """
    Огрубление C = {P_i}: полный набор взаимно ортогональных проекторов.

    Каждому элементу соответствует непрозрачная метка (собственное значение,
    номер корзины, число частиц, кортеж меток для произведений).
    """
    elements: Tuple[Projector, ...]
    labels: Tuple[Label, ...]
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.elements:
            raise InvalidCoarseGraining("Огрубление не содержит элементов")
        if len(self.labels) != len(self.elements):
            raise InvalidCoarseGraining(
                "Число меток не совпадает с числом проекторов",
                details={"elements": len(self.elements), "labels": len(self.labels)}
            )
        dims = {p.dim for p in self.elements}
        if len(dims) != 1:
            raise DimensionMismatch(
                "Проекторы огрубления действуют в разных пространствах",
                details={"dims": sorted(dims)}
            )
        if validate and self.dim > settings.VALIDATE_MAX_DIM:
            logger.debug(
                f"Проверка полноты огрубления пропущена: dim={self.dim} > VALIDATE_MAX_DIM={settings.VALIDATE_MAX_DIM}"
            )
        elif validate:
            total, residual = _stacked_residual([p.basis for p in self.elements], self.dim)
            if total != self.dim:
                raise InvalidCoarseGraining(
                    "Проекторы не дают в сумме единичный оператор",
                    details={"total_volume": total, "dim": self.dim}
                )
            if residual > settings.COMPLETENESS_TOL:
                raise InvalidCoarseGraining(
                    "Проекторы не взаимно ортогональны",
                    details={"orthogonality": residual}
                )

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    @property
    def volumes(self) -> np.ndarray:
        return np.array([p.volume for p in self.elements])

    def __len__(self) -> int:
        return len(self.elements)

    @cached_property
    def unitary(self) -> np.ndarray:
        """Базисы всех элементов, собранные в одну унитарную матрицу"""
        u = np.hstack([p.basis for p in self.elements])
        u.setflags(write=False)
        return u

    @classmethod
    def from_bases(
        cls, bases: Sequence[np.ndarray], labels: Sequence[Label], validate: bool = True
    ) -> "CoarseGraining":
        return cls(tuple(Projector(b, validate=False) for b in bases), tuple(labels), validate=validate)

    @classmethod
    def from_matrices(
        cls, matrices: Sequence[Any], labels: Optional[Sequence[Label]] = None,
        tol: Optional[float] = None
    ) -> "CoarseGraining":
        """
        Огрубление из плотных матриц проекторов.

        Почти ортогональные (в пределах tol) наборы переортогонализуются,
        наборы за пределами допуска отклоняются.
        """
        tol = settings.COMPLETENESS_TOL if tol is None else tol
        projectors = [Projector.from_matrix(m) for m in matrices]
        if not projectors:
            raise InvalidCoarseGraining("Огрубление не содержит элементов")
        dim = projectors[0].dim
        if any(p.dim != dim for p in projectors):
            raise DimensionMismatch("Проекторы огрубления разной размерности")
        labels = list(range(len(projectors))) if labels is None else list(labels)
        if len(labels) != len(projectors):
            raise InvalidCoarseGraining("Число меток не совпадает с числом проекторов")
        dense = [p.matrix for p in projectors]
        completeness = identity_residual(sum(dense))
        if completeness > tol:
            raise InvalidCoarseGraining(
                "Проекторы не дают в сумме единичный оператор",
                details={"completeness": completeness}
            )
        overlap = 0.0
        for i in range(len(dense)):
            for j in range(i + 1, len(dense)):
                overlap = max(overlap, float(np.max(np.abs(dense[i] @ dense[j]))))
        if overlap > tol:
            raise InvalidCoarseGraining(
                "Проекторы не взаимно ортогональны",
                details={"orthogonality": overlap}
            )
        kept = [(p, label) for p, label in zip(projectors, labels) if p.rank > 0]
        sizes = [p.rank for p, _ in kept]
        repaired = orthonormalize(np.hstack([p.basis for p, _ in kept]))
        bases = split_columns(repaired, sizes)
        return cls.from_bases(bases, [label for _, label in kept])


@dataclass(frozen=True, eq=False)
class KrausCoarseGraining:
    """Обобщенное измерение {K_i} с Σ K_i† K_i = I"""
    operators: Tuple[np.ndarray, ...]
    labels: Tuple[Label, ...]
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        try:
            ops = tuple(as_complex_matrix(k) for k in self.operators)
        except ValueError as e:
            raise NotTracePreserving(str(e))
        if not ops:
            raise NotTracePreserving("Набор операторов Крауса пуст")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(ops):
            raise NotTracePreserving("Число меток не совпадает с числом операторов")
        if len({k.shape[0] for k in ops}) != 1:
            raise DimensionMismatch("Операторы Крауса разной размерности")
        if validate:
            residual = identity_residual(sum(k.conj().T @ k for k in ops))
            if residual > settings.COMPLETENESS_TOL:
                raise NotTracePreserving(
                    "Операторы Крауса не сохраняют след",
                    details={"trace_preservation": residual}
                )

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)


@dataclass(frozen=True)
class TensorSpace:
    """Разбиение H = H_A ⊗ ... ⊗ H_C"""
    subsystem_dims: Tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.subsystem_dims)
        if not dims or any(d < 1 for d in dims):
            raise DimensionMismatch(
                "Размерности подсистем должны быть положительны",
                details={"subsystem_dims": list(dims)}
            )
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def count(self) -> int:
        return len(self.subsystem_dims)

