"""
Точка входа командной строки: python -m src.main <команда> ...

Коды выхода: 0 - успех, 1 - нарушены инварианты, 2 - ошибка входных
данных, 3 - несовпадение размерностей, 4 - превышен лимит ресурсов.
"""
import argparse
import sys
from typing import Optional, Sequence

from src.cli.commands import classical, entropy, qce, simulate, validate
from src.core.config import settings
from src.core.exceptions import ObsEntropyException
from src.utils.logger import setup_logging

logger = setup_logging("cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obsentropy",
        description="Наблюдательная энтропия: квантовые и классические огрубления, S^qc, квенчи",
    )
    parser.add_argument("--version", action="version", version=f"{settings.APP_NAME} {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (entropy, classical, qce, simulate, validate):
        command.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logger.debug(f"{settings.APP_NAME} v{settings.APP_VERSION}: команда {args.command}")
    try:
        return args.handler(args)
    except ObsEntropyException as e:
        print(f"{e.error_code}: {e.message}", file=sys.stderr)
        if e.details:
            logger.debug(f"Детали: {e.details}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
