"""
Series export
Plot-ready CSV files from one or many metrics.jsonl files, with Student-t intervals across seeds
"""

import csv
import logging
import os
from typing import Dict, List, Sequence

import numpy as np
from scipy import stats

from core.errors import CoEvolutionError
from .metrics_recorder import read_metrics

logger = logging.getLogger(__name__)

SERIES = (
    'mean_reward',
    'mean_tool_calls',
    'active_instruction_chars',
    'mean_response_items',
    'population_size',
    'best_weight',
)


class UnknownSeriesError(CoEvolutionError, KeyError):
    """Requested series is not recorded in metrics.jsonl"""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown series '{self.name}', valid names: {', '.join(SERIES)}"


def discover_runs(path: str) -> List[str]:
    """The directory itself when it holds metrics.jsonl, else its run subdirectories in name order"""
    if os.path.exists(os.path.join(path, 'metrics.jsonl')):
        return [path]
    if not os.path.isdir(path):
        raise FileNotFoundError(f"No metrics found under {path}")
    runs = sorted(
        os.path.join(path, name) for name in os.listdir(path)
        if os.path.exists(os.path.join(path, name, 'metrics.jsonl'))
    )
    if not runs:
        raise FileNotFoundError(f"No metrics found under {path}")
    return runs


def load_series(run_dir: str, name: str) -> Dict[int, float]:
    if name not in SERIES:
        raise UnknownSeriesError(name)
    return {int(row['step']): float(row[name]) for row in read_metrics(os.path.join(run_dir, 'metrics.jsonl'))}


def t_interval(values: Sequence[float], confidence: float = 0.95):
    """(mean, low, high) with seeds - 1 degrees of freedom; zero width for a single seed or constant values"""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return mean, mean, mean
    sem = float(values.std(ddof=1)) / np.sqrt(values.size)
    half = float(stats.t.ppf(0.5 + confidence / 2.0, values.size - 1)) * sem
    return mean, mean - half, mean + half


def export_series(run_dirs: Sequence[str], names: Sequence[str], output_dir: str) -> List[str]:
    """
    Write one CSV per series

    A single run gives columns (step, value); several runs give
    (step, mean, ci95_low, ci95_high) over the steps every run recorded.

    Returns:
        Paths written, in the order of names
    """
    for name in names:
        if name not in SERIES:
            raise UnknownSeriesError(name)
    os.makedirs(output_dir, exist_ok=True)

    written = []
    for name in names:
        per_run = [load_series(run_dir, name) for run_dir in run_dirs]
        path = os.path.join(output_dir, f"{name}.csv")
        with open(path, 'w', encoding='utf-8', newline='') as f:
            if len(per_run) == 1:
                writer = csv.DictWriter(f, fieldnames=['step', 'value'], lineterminator='\n')
                writer.writeheader()
                for step in sorted(per_run[0]):
                    writer.writerow({'step': step, 'value': per_run[0][step]})
            else:
                writer = csv.DictWriter(f, fieldnames=['step', 'mean', 'ci95_low', 'ci95_high'],
                                        lineterminator='\n')
                writer.writeheader()
                steps = sorted(set.intersection(*(set(series) for series in per_run)))
                for step in steps:
                    mean, low, high = t_interval([series[step] for series in per_run])
                    writer.writerow({'step': step, 'mean': mean, 'ci95_low': low, 'ci95_high': high})
        logger.info(f"Exported {name} from {len(per_run)} run(s) to {path}")
        written.append(path)
    return written
