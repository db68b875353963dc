"""Команда entropy: наблюдательная энтропия состояния для последовательности огрублений"""
import argparse

import numpy as np

from src.cli.dependencies import emit_report, load_coarse_graining, load_state
from src.models.entropy import MeasurementSequence
from src.models.hilbert import CoarseGraining
from src.schemas.reports import EntropyReport, RecordOut
from src.services.entropy_core import (
    entropy_decomposition, entropy_of_distribution, kl_divergence, macrostate_distribution,
    to_bits, von_neumann_entropy
)
from src.utils.logger import cli_logger as logger


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "entropy", help="Наблюдательная энтропия для упорядоченной последовательности огрублений"
    )
    parser.add_argument("state", help="Файл матрицы плотности (JSON)")
    parser.add_argument("cgs", nargs="+", help="Файлы огрублений в порядке измерения")
    parser.add_argument("--bits", action="store_true", help="Вывод в битах вместо натов")
    parser.add_argument("-o", "--output", help="Файл отчета (по умолчанию stdout)")
    parser.set_defaults(handler=cmd_entropy)


def cmd_entropy(args: argparse.Namespace) -> int:
    state = load_state(args.state)
    sequence = MeasurementSequence(tuple(load_coarse_graining(p) for p in args.cgs))
    distribution = macrostate_distribution(state, sequence)
    entropy = entropy_of_distribution(distribution)

    shannon = boltzmann = None
    if len(sequence) == 1 and isinstance(sequence.steps[0], CoarseGraining):
        shannon, boltzmann = entropy_decomposition(state, sequence.steps[0])

    convert = to_bits if args.bits else float
    report = EntropyReport(
        entropy=convert(entropy),
        shannon_part=None if shannon is None else convert(shannon),
        mean_boltzmann_part=None if boltzmann is None else convert(boltzmann),
        von_neumann=convert(von_neumann_entropy(state)),
        ln_dim=convert(float(np.log(state.dim))),
        kl=convert(kl_divergence(distribution.probabilities, distribution.volumes / state.dim)),
        units="bits" if args.bits else "nats",
        records=[
            RecordOut(labels=list(r.multi_index), probability=r.probability, volume=r.volume)
            for r in distribution.records
        ],
    )
    logger.info(f"S={entropy:.12f} нат, макросостояний={len(distribution)}")
    emit_report(report, args.output)
    return 0
