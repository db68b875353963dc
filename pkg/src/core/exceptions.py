from typing import Optional, Dict, Any


class ObsEntropyException(Exception):
    """Базовое исключение для всех ошибок ObsEntropy"""

    error_code: str = "OBSENTROPY_ERROR"
    exit_code: int = 1

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        exit_code: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        if error_code is not None:
            self.error_code = error_code
        if exit_code is not None:
            self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


# === Нарушения инвариантов (exit 1) ===

class ValidationException(ObsEntropyException):
    """Базовое исключение для нарушенных инвариантов"""
    error_code = "VALIDATION_ERROR"
    exit_code = 1


class NotAState(ValidationException):
    """Матрица не является матрицей плотности"""
    error_code = "NOT_A_STATE"


class NonHermitian(ValidationException):
    """Оператор не эрмитов"""
    error_code = "NON_HERMITIAN"


class NotAProjector(ValidationException):
    """Оператор не является ортогональным проектором"""
    error_code = "NOT_A_PROJECTOR"


class InvalidCoarseGraining(ValidationException):
    """Проекторы не ортогональны или не дают в сумме единицу"""
    error_code = "INVALID_COARSE_GRAINING"


class NotTracePreserving(ValidationException):
    """Набор операторов Крауса не сохраняет след"""
    error_code = "NOT_TRACE_PRESERVING"


class NonCommuting(ValidationException):
    """Огрубления не коммутируют"""
    error_code = "NON_COMMUTING"


class InconsistentBranch(ValidationException):
    """Ненулевая вероятность у макросостояния нулевого объема"""
    error_code = "INCONSISTENT_BRANCH"


class NotADensity(ValidationException):
    """Классическое распределение не нормировано или отрицательно"""
    error_code = "NOT_A_DENSITY"


class PartitionMismatch(ValidationException):
    """Классическое огрубление не является разбиением пространства"""
    error_code = "PARTITION_MISMATCH"


class ZeroDensity(ValidationException):
    """Плотность на сетке тождественно равна нулю"""
    error_code = "ZERO_DENSITY"


class EmptyShell(ValidationException):
    """В энергетическом окне нет собственных состояний"""
    error_code = "EMPTY_SHELL"


# === Ошибки разбора входных данных (exit 2) ===

class ParseException(ObsEntropyException):
    """Базовое исключение для ошибок чтения файлов"""
    error_code = "PARSE_ERROR"
    exit_code = 2


class MalformedInput(ParseException):
    """Файл не читается или имеет неверную структуру"""
    error_code = "MALFORMED_INPUT"


class MissingInputFile(ParseException):
    """Входной файл не найден"""
    error_code = "MISSING_INPUT_FILE"


class ConfigError(ParseException):
    """Неверная конфигурация модели или сценария"""
    error_code = "CONFIG_ERROR"


# === Несовпадение размерностей (exit 3) ===

class DimensionException(ObsEntropyException):
    """Базовое исключение для ошибок размерности"""
    error_code = "DIMENSION_ERROR"
    exit_code = 3


class DimensionMismatch(DimensionException):
    """Размерности объектов не совпадают"""
    error_code = "DIMENSION_MISMATCH"


# === Ограничения ресурсов (exit 4) ===

class ResourceException(ObsEntropyException):
    """Базовое исключение для превышения лимитов"""
    error_code = "RESOURCE_ERROR"
    exit_code = 4


class ResourceCapExceeded(ResourceException):
    """Размер модели превышает настроенный лимит"""
    error_code = "RESOURCE_CAP_EXCEEDED"
