"""Команда validate: проверка инвариантов входного файла с измеренными невязками"""
import argparse
from typing import Dict, List, Tuple

import numpy as np
from pydantic import ValidationError

from src.cli.dependencies import emit_report, read_json
from src.core.config import settings
from src.core.exceptions import MalformedInput
from src.schemas.files import (
    ClassicalCoarseGrainingFile, ClassicalSpaceFile, CoarseGrainingFile, MatrixFile
)
from src.schemas.reports import CheckResult, ValidationReport
from src.schemas.scenario import ScenarioConfig
from src.services.hilbert import kraus_checks, observable_checks, projector_set_checks, state_checks
from src.utils.logger import cli_logger as logger


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="Проверка инвариантов файла")
    parser.add_argument("path", help="Файл состояния, наблюдаемой, огрубления или сценария")
    parser.add_argument("-o", "--output", help="Файл отчета (по умолчанию stdout)")
    parser.set_defaults(handler=cmd_validate)


def _check(name: str, passed: bool, residual: float) -> Dict:
    return {"check": name, "passed": bool(passed), "residual": float(residual)}


def _classical_space_checks(data: ClassicalSpaceFile) -> List[Dict]:
    weights = np.ones(len(data.points)) if data.weights is None else np.array(data.weights)
    density = np.array(data.density)
    total = abs(float(np.dot(weights, density)) - 1)
    return [
        _check("positive_weights", weights.min() > 0, float(weights.min())),
        _check("nonnegative_density", density.min() >= 0, float(density.min())),
        _check("normalized", total <= settings.TRACE_TOL, total),
    ]


def _classical_cg_checks(data: ClassicalCoarseGrainingFile) -> List[Dict]:
    indices = [i for cell in data.cells for i in cell]
    duplicates = len(indices) - len(set(indices))
    empty = sum(1 for cell in data.cells if not cell)
    checks = [
        _check("disjoint_cells", duplicates == 0, duplicates),
        _check("nonempty_cells", empty == 0, empty),
    ]
    if data.labels is not None:
        mismatch = abs(len(data.labels) - len(data.cells))
        checks.append(_check("label_count", mismatch == 0, mismatch))
    return checks


def _scenario_checks(data: ScenarioConfig) -> List[Dict]:
    # сама схема уже проверила геометрию, времена и набор энтропий
    sizes = data.model.cell_sizes()
    sites_ok = data.model.sites <= settings.MAX_SITES
    dim = data.model.sector_dim()
    particles = data.initial_state.count("1")
    mismatch = 0 if data.model.particles is None else abs(particles - data.model.particles)
    return [
        _check("site_cap", sites_ok, data.model.sites),
        _check("dim_cap", dim <= settings.MAX_DIM, dim),
        _check("nonempty_cells", min(sizes) >= 1, min(sizes)),
        _check("initial_state_sector", mismatch == 0, mismatch),
    ]


def _classify(path: str) -> Tuple[str, List[Dict]]:
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise MalformedInput(f"{path}: ожидался JSON-объект")
    try:
        if "model" in raw:
            return "scenario", _scenario_checks(ScenarioConfig.model_validate(raw))
        if "elements" in raw:
            data = CoarseGrainingFile.model_validate(raw)
            matrices = [e.to_array() for e in data.elements]
            if data.kind == "kraus":
                return "kraus", kraus_checks(matrices)
            return "coarse_graining", projector_set_checks(matrices)
        if "cells" in raw:
            return "classical_coarse_graining", _classical_cg_checks(ClassicalCoarseGrainingFile.model_validate(raw))
        if "density" in raw:
            return "classical_space", _classical_space_checks(ClassicalSpaceFile.model_validate(raw))
        data = MatrixFile.model_validate(raw)
    except ValidationError as e:
        raise MalformedInput(
            f"{path}: неверная структура файла",
            details={"errors": [err["msg"] for err in e.errors()]}
        )
    if data.type == "observable":
        return "observable", observable_checks(data.to_array())
    return "state", state_checks(data.to_array())


def cmd_validate(args: argparse.Namespace) -> int:
    kind, checks = _classify(args.path)
    results = [
        CheckResult(check=c["check"], passed=bool(c["passed"]), residual=float(c["residual"])) for c in checks
    ]
    passed = all(c.passed for c in results)
    for c in results:
        if not c.passed:
            logger.warning(f"{args.path}: проверка {c.check} не пройдена (невязка {c.residual:.3e})")
    emit_report(ValidationReport(kind=kind, passed=passed, checks=results), args.output)
    return 0 if passed else 1
