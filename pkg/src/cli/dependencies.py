"""
Чтение входных файлов и запись результатов, общие для всех команд.
"""
import json
from pathlib import Path
from typing import Any, Optional, Type, TypeVar, Union
import pandas as pd
from pydantic import BaseModel, ValidationError

from src.core.config import settings
from src.core.exceptions import MalformedInput, MissingInputFile, ValidationException
from src.models.classical import ClassicalCoarseGraining, ClassicalSpace
from src.models.entropy import Step
from src.models.hilbert import CoarseGraining, KrausCoarseGraining, QuantumState
from src.schemas.files import (
    ClassicalCoarseGrainingFile, ClassicalSpaceFile, CoarseGrainingFile, MatrixFile
)
from src.schemas.scenario import ScenarioConfig
from src.utils.logger import cli_logger as logger

SchemaT = TypeVar("SchemaT", bound=BaseModel)


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    if not path.is_file():
        raise MissingInputFile(f"Файл не найден: {path}", details={"path": str(path)})
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedInput(f"{path}: некорректный JSON ({e})", details={"path": str(path)})


def parse_file(path: Union[str, Path], schema: Type[SchemaT]) -> SchemaT:
    data = read_json(path)
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        raise MalformedInput(
            f"{path}: неверная структура файла",
            details={"path": str(path), "errors": [err["msg"] for err in e.errors()]}
        )


def _reraise_as_input_error(path, e: ValidationException):
    """Нарушение инварианта при загрузке - ошибка входных данных"""
    raise MalformedInput(
        f"{path}: {e.error_code}: {e.message}",
        details={"path": str(path), "cause": e.error_code, **e.details}
    )


def hashable_label(value: Any) -> Any:
    """JSON-списки в метках превращаются в кортежи"""
    if isinstance(value, list):
        return tuple(hashable_label(v) for v in value)
    return value


def load_state(path: Union[str, Path]) -> QuantumState:
    data = parse_file(path, MatrixFile)
    try:
        return QuantumState(data.to_array())
    except ValidationException as e:
        _reraise_as_input_error(path, e)


def load_coarse_graining(path: Union[str, Path]) -> Step:
    data = parse_file(path, CoarseGrainingFile)
    matrices = [e.to_array() for e in data.elements]
    labels = (
        list(range(len(matrices))) if data.labels is None
        else [hashable_label(v) for v in data.labels]
    )
    try:
        if data.kind == "kraus":
            return KrausCoarseGraining(tuple(matrices), tuple(labels))
        return CoarseGraining.from_matrices(matrices, labels)
    except ValidationException as e:
        _reraise_as_input_error(path, e)


def load_classical_space(path: Union[str, Path]) -> ClassicalSpace:
    data = parse_file(path, ClassicalSpaceFile)
    n = len(data.points)
    weights = [1.0] * n if data.weights is None else data.weights
    try:
        return ClassicalSpace(tuple(hashable_label(p) for p in data.points), weights, data.density)
    except ValidationException as e:
        _reraise_as_input_error(path, e)


def load_classical_coarse_graining(path: Union[str, Path]) -> ClassicalCoarseGraining:
    data = parse_file(path, ClassicalCoarseGrainingFile)
    labels = () if data.labels is None else tuple(hashable_label(v) for v in data.labels)
    try:
        return ClassicalCoarseGraining(tuple(tuple(c) for c in data.cells), labels)
    except ValidationException as e:
        _reraise_as_input_error(path, e)


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    return parse_file(path, ScenarioConfig)


# === Вывод ===

def resolve_output(output: Optional[str], default_name: str) -> Path:
    """Относительные пути отсчитываются от OUTPUT_DIR"""
    path = Path(output) if output else Path(default_name)
    if not path.is_absolute():
        path = Path(settings.OUTPUT_DIR) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def dump_json(data: Any) -> str:
    # repr вещественных чисел в json однозначно восстанавливает значение
    return json.dumps(data, ensure_ascii=False, indent=2, allow_nan=False)


def emit_report(report: BaseModel, output: Optional[str]) -> None:
    """JSON-отчет в stdout или в файл"""
    text = dump_json(report.model_dump(mode="json"))
    if output:
        path = resolve_output(output, output)
        path.write_text(text + "\n", encoding="utf-8")
        logger.info(f"Отчет записан: {path}")
    else:
        print(text)


def write_table(table: pd.DataFrame, path: Path) -> None:
    """CSV с 17 значащими цифрами: повторная загрузка дает те же числа"""
    table.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
