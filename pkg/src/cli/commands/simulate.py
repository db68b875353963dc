"""Команда simulate: квенч на решеточной модели, CSV временного ряда и метаданные"""
import argparse
from pathlib import Path
import sys

from tabulate import tabulate

from src.cli.dependencies import (
    dump_json, emit_report, load_coarse_graining, load_scenario, resolve_output, write_table
)
from src.core.config import settings
from src.core.exceptions import ConfigError
from src.models.hilbert import CoarseGraining
from src.models.thermo import QuenchScenario
from src.schemas.reports import QuenchSummary
from src.services.thermo import average_tail, build_model, domain_wall_state, run_quench
from src.utils.logger import cli_logger as logger


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="Эволюция энтропий после квенча")
    parser.add_argument("scenario", help="Файл сценария (JSON)")
    parser.add_argument("--delta-e", type=float, default=None, help="Ширина энергетической оболочки ΔE")
    parser.add_argument("--window", type=float, default=settings.AVERAGE_WINDOW, help="Доля времени для усреднения")
    parser.add_argument("-o", "--output", help="CSV-файл (по умолчанию <сценарий>.csv в OUTPUT_DIR)")
    parser.set_defaults(handler=cmd_simulate)


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_scenario(args.scenario)
    model = build_model(config.resolved_model())
    initial = domain_wall_state(model, config.initial_state)

    system_cg = None
    if config.system_cg:
        cg_path = Path(config.system_cg)
        if not cg_path.is_absolute():
            cg_path = Path(args.scenario).parent / cg_path
        system_cg = load_coarse_graining(cg_path)
        if not isinstance(system_cg, CoarseGraining):
            raise ConfigError("Огрубление подсистемы должно быть проекционным")

    scenario = QuenchScenario(
        model=model,
        initial_state=initial,
        times=tuple(config.time_values()),
        delta_e=args.delta_e if args.delta_e is not None else config.delta_e,
        entropies=tuple(config.entropies),
        system_cg=system_cg,
        system_cell=config.system_cell,
    )
    result = run_quench(scenario)

    csv_path = resolve_output(args.output, Path(args.scenario).stem + ".csv")
    meta_path = csv_path.with_suffix(".meta.json")
    write_table(result.table, csv_path)
    meta_path.write_text(dump_json(result.metadata) + "\n", encoding="utf-8")
    logger.info(f"Временной ряд: {csv_path}, метаданные: {meta_path}")

    averages = {
        entropy_id: average_tail(group.sort_values("t")["value"].to_numpy(), args.window)
        for entropy_id, group in result.table.groupby("entropy_id", sort=False)
    }
    equilibrium = averages.get("1c")
    gap = None
    if equilibrium is not None and "2c" in averages:
        gap = equilibrium - averages["2c"]

    rows = [[e, v] for e, v in averages.items()]
    rows += [["S_vN", result.metadata["von_neumann"]], ["ln dim", result.metadata["ln_dim"]]]
    print(tabulate(rows, headers=["энтропия", "среднее по окну"], floatfmt=".6f"), file=sys.stderr)

    emit_report(QuenchSummary(
        output=str(csv_path),
        metadata=str(meta_path),
        rows=len(result.table),
        window=args.window,
        final_averages=averages,
        equilibrium=equilibrium,
        gap=gap,
    ), None)
    return 0
