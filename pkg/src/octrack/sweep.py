"""Threshold/similarity/stage ablation sweeps over scenario suites.

One CSV row per (grid cell, scenario) plus one aggregate row per cell.
Cells run independently; FC_TRACK_THREADS caps worker processes. Rows are
sorted before writing so the output does not depend on scheduling.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor

from .config import TrackerConfig
from .suite import SuiteAggregate, run_scenario
from .synth import ScenarioSpec

CELL_KEYS = ("tau_update", "tau_overlap", "tau_min", "tau_dif",
             "similarity", "correction_stage1", "correction_stage2")
METRIC_KEYS = ("idf1", "mota", "switch_count", "switch_mean",
               "switch_median", "long_ratio", "idtp", "idfp", "idfn")


def grid_cells(grid: dict) -> list[dict]:
    """Expand {param: [values...]} into the cross-product of cells.

    Parameters not in the grid keep the base config's value.
    """
    for key in grid:
        if key not in CELL_KEYS:
            raise ValueError(f"unknown sweep parameter {key!r}")
    keys = [k for k in CELL_KEYS if k in grid]
    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        cells.append(dict(zip(keys, combo)))
    return cells


def max_workers() -> int:
    env = os.environ.get("FC_TRACK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_cell_scenario(args):
    cell, base_values, spec = args
    config = TrackerConfig(**{**base_values, **cell})
    _, report = run_scenario(spec, config)
    return cell, spec.seed, report


def sweep(grid: dict, specs: list[ScenarioSpec],
          base_config: TrackerConfig | None = None,
          workers: int | None = None) -> list[dict]:
    """Run every grid cell over every scenario.

    Returns row dicts: cell parameters, `scenario` (seed or "aggregate"),
    and the metric columns.
    """
    base_config = base_config or TrackerConfig()
    base_values = {k: getattr(base_config, k) for k in CELL_KEYS}
    cells = grid_cells(grid)
    tasks = [(cell, base_values, spec) for cell in cells for spec in specs]

    workers = workers if workers is not None else max_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell_scenario, tasks, chunksize=4))
    else:
        outcomes = [_run_cell_scenario(t) for t in tasks]

    rows = []
    aggregates: dict[tuple, SuiteAggregate] = {}
    for cell, seed, report in outcomes:
        full = {**base_values, **cell}
        key = tuple(full[k] for k in CELL_KEYS)
        aggregates.setdefault(key, SuiteAggregate()).add(report)
        rows.append({**full, "scenario": seed,
                     "idf1": report.idf1, "mota": report.mota,
                     "switch_count": report.switch_count,
                     "switch_mean": report.switch_mean,
                     "switch_median": report.switch_median,
                     "long_ratio": report.long_ratio,
                     "idtp": report.idtp, "idfp": report.idfp,
                     "idfn": report.idfn})
    for key, agg in aggregates.items():
        full = dict(zip(CELL_KEYS, key))
        rows.append({**full, "scenario": "aggregate",
                     "idf1": agg.idf1, "mota": agg.mota,
                     "switch_count": agg.switch_count,
                     "switch_mean": agg.switch_mean,
                     "switch_median": agg.switch_median,
                     "long_ratio": agg.long_ratio,
                     "idtp": agg.idtp, "idfp": agg.idfp, "idfn": agg.idfn})

    rows.sort(key=lambda r: tuple(str(r[k]) for k in (*CELL_KEYS, "scenario")))
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    header = (*CELL_KEYS, "scenario", *METRIC_KEYS)
    out = [",".join(header)]
    for r in rows:
        cells = []
        for k in header:
            v = r[k]
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                cells.append(f"{v:.6f}")
            else:
                cells.append(str(v))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"
