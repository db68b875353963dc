"""Команда classical: наблюдательная энтропия на конечном классическом пространстве"""
import argparse

import numpy as np

from src.cli.dependencies import emit_report, load_classical_coarse_graining, load_classical_space
from src.schemas.reports import ClassicalReport, RecordOut
from src.services.classical import classical_kl_identity, classical_macrostate_distribution, gibbs_entropy
from src.services.entropy_core import to_bits


def register(subparsers) -> None:
    parser = subparsers.add_parser("classical", help="Классическая наблюдательная энтропия")
    parser.add_argument("space", help="Файл пространства Γ с весами и плотностью (JSON)")
    parser.add_argument("cgs", nargs="*", help="Файлы классических огрублений")
    parser.add_argument("--bits", action="store_true", help="Вывод в битах вместо натов")
    parser.add_argument("-o", "--output", help="Файл отчета (по умолчанию stdout)")
    parser.set_defaults(handler=cmd_classical)


def cmd_classical(args: argparse.Namespace) -> int:
    space = load_classical_space(args.space)
    cgs = [load_classical_coarse_graining(p) for p in args.cgs]
    entropy, kl, _ = classical_kl_identity(space, cgs)
    macro = classical_macrostate_distribution(space, cgs)
    convert = to_bits if args.bits else float
    report = ClassicalReport(
        entropy=convert(entropy),
        gibbs=convert(gibbs_entropy(space)),
        ln_total=convert(float(np.log(space.total_measure))),
        kl=convert(kl),
        units="bits" if args.bits else "nats",
        records=[
            RecordOut(labels=list(labels), probability=float(p), volume=float(v))
            for labels, p, v in zip(macro.labels, macro.probabilities, macro.volumes)
        ],
    )
    emit_report(report, args.output)
    return 0
