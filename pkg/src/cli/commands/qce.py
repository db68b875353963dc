"""Команда qce: энтропия квантовых корреляций с трассой оптимизатора"""
import argparse

from src.cli.dependencies import emit_report, load_state
from src.core.config import settings
from src.models.hilbert import TensorSpace
from src.schemas.files import MatrixData
from src.schemas.reports import QceReport, QceTraceOut
from src.services.entropy_core import to_bits
from src.services.local import quantum_correlation_entropy


def register(subparsers) -> None:
    parser = subparsers.add_parser("qce", help="Энтропия квантовых корреляций S^qc")
    parser.add_argument("state", help="Файл матрицы плотности (JSON)")
    parser.add_argument("--dims", type=int, nargs="+", required=True, help="Размерности подсистем")
    parser.add_argument("--restarts", type=int, default=settings.QCE_RESTARTS)
    parser.add_argument("--seed", type=int, default=settings.QCE_SEED)
    parser.add_argument("--tol", type=float, default=settings.QCE_TOL_OBJ, help="Порог улучшения за проход")
    parser.add_argument("--max-sweeps", type=int, default=settings.QCE_MAX_SWEEPS)
    parser.add_argument("--bits", action="store_true", help="Вывод в битах вместо натов")
    parser.add_argument("-o", "--output", help="Файл отчета (по умолчанию stdout)")
    parser.set_defaults(handler=cmd_qce)


def cmd_qce(args: argparse.Namespace) -> int:
    state = load_state(args.state)
    space = TensorSpace(tuple(args.dims))
    result = quantum_correlation_entropy(
        state, space,
        restarts=args.restarts, seed=args.seed, tol_obj=args.tol, max_sweeps=args.max_sweeps,
    )
    convert = to_bits if args.bits else float
    report = QceReport(
        value=convert(result.value),
        achieved_entropy=convert(result.achieved_entropy),
        von_neumann=convert(result.von_neumann),
        certificate_gap=convert(result.certificate_gap),
        best_restart=result.best_restart,
        units="bits" if args.bits else "nats",
        local_bases=[MatrixData.from_array(cg.unitary) for cg in result.best_measurement.local_cgs],
        trace=[
            QceTraceOut(restart=e.restart, iterations=e.iterations, achieved=convert(e.achieved))
            for e in result.optimizer_trace
        ],
    )
    emit_report(report, args.output)
    return 0
