from typing import Any, Dict, List, Optional
from pydantic import BaseModel

from src.schemas.files import MatrixData


class RecordOut(BaseModel):
    """Мульти-макросостояние в отчете"""
    labels: List[Any]
    probability: float
    volume: float


class EntropyReport(BaseModel):
    entropy: float
    shannon_part: Optional[float] = None
    mean_boltzmann_part: Optional[float] = None
    von_neumann: float
    ln_dim: float
    kl: float
    units: str = "nats"
    records: List[RecordOut]


class ClassicalReport(BaseModel):
    entropy: float
    gibbs: float
    ln_total: float
    kl: float
    units: str = "nats"
    records: List[RecordOut]


class QceTraceOut(BaseModel):
    restart: int
    iterations: int
    achieved: float


class QceReport(BaseModel):
    """S^qc - лучшая найденная верхняя оценка, а не доказанный минимум"""
    value: float
    achieved_entropy: float
    von_neumann: float
    certificate_gap: float
    best_restart: int
    units: str = "nats"
    local_bases: List[MatrixData]
    trace: List[QceTraceOut]


class CheckResult(BaseModel):
    check: str
    passed: bool
    residual: float


class ValidationReport(BaseModel):
    kind: str
    passed: bool
    checks: List[CheckResult]


class QuenchSummary(BaseModel):
    """Итоги квенча: средние по последнему окну и разрыв до равновесного значения"""
    output: str
    metadata: str
    rows: int
    window: float
    final_averages: Dict[str, float]
    equilibrium: Optional[float] = None
    gap: Optional[float] = None
