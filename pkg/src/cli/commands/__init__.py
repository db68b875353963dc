from src.cli.commands import classical, entropy, qce, simulate, validate

__all__ = ["classical", "entropy", "qce", "simulate", "validate"]
