#!/usr/bin/env python3
"""
Калибровочный запуск эталонного квенча (L=12, N=6, две ячейки, доменная стенка)
"""
import sys
from pathlib import Path

# Добавляем корневую директорию в путь
sys.path.append(str(Path(__file__).parent.parent))

import numpy as np
from tabulate import tabulate

from src.models.thermo import QuenchScenario
from src.schemas.scenario import ScenarioConfig
from src.cli.dependencies import read_json, write_table
from src.services.thermo import average_tail, build_model, domain_wall_state, run_quench


def main() -> int:
    scenario_path = Path(__file__).parent.parent / "scenarios" / "reference_quench.json"
    config = ScenarioConfig.model_validate(read_json(scenario_path))
    model = build_model(config.resolved_model())
    scenario = QuenchScenario(
        model=model,
        initial_state=domain_wall_state(model, config.initial_state),
        times=tuple(config.time_values()),
        delta_e=config.delta_e,
        entropies=tuple(config.entropies),
    )
    print(f"🚀 Эталонный квенч: dim={model.dim}, времен={len(scenario.times)}")
    result = run_quench(scenario)
    table = result.table

    series = {e: g.sort_values("t")["value"].to_numpy() for e, g in table.groupby("entropy_id")}
    ln_dim = result.metadata["ln_dim"]
    equilibrium = float(series["1c"].mean())
    tail_2c = average_tail(series["2c"])
    relative = abs(tail_2c - equilibrium) / equilibrium
    hierarchy = float(np.max(series["3a"] - series["2a"]))
    flat = float(np.ptp(series["1c"]))

    rows = [
        ["S_th (1c)", equilibrium],
        ["размах 1c по времени", flat],
        ["среднее 2c по последним 25%", tail_2c],
        ["отклонение от S_th", relative],
        ["max(3a - 2a)", hierarchy],
        ["ln dim", ln_dim],
    ]
    print(tabulate(rows, floatfmt=".6g"))

    out = Path("reference_quench.csv")
    write_table(table, out)
    print(f"📄 Временной ряд: {out}")

    ok = relative <= 0.15 and tail_2c <= equilibrium + 0.05 * ln_dim and hierarchy <= 1e-9 and flat <= 1e-8
    print("✅ Критерии сходимости выполнены" if ok else "❌ Критерии сходимости не выполнены")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
