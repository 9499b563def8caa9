"""
Metrics recorder
Per-step training metrics appended to metrics.jsonl in batches
"""

import json
import logging
import os
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)

METRIC_FIELDS = (
    'step',
    'mean_reward',
    'mean_tool_calls',
    'active_instruction_chars',
    'mean_response_items',
    'population_size',
    'best_weight',
    'event',
)


class MetricsRecorder:
    """
    Buffers rows in memory and writes them every flush_every rows.

    Rows keep METRIC_FIELDS order so two identical runs produce identical files.
    """

    def __init__(self, path: str, flush_every: int = 10):
        self.path = path
        self.flush_every = max(int(flush_every), 1)
        self._pending: List[Dict[str, Any]] = []

    def record(self, row: Dict[str, Any]):
        missing = [name for name in METRIC_FIELDS if name not in row]
        if missing:
            raise ValueError(f"Metrics row is missing {missing}")
        self._pending.append({name: row[name] for name in METRIC_FIELDS})
        if len(self._pending) >= self.flush_every:
            self.flush()

    def flush(self):
        if not self._pending:
            return
        directory = os.path.dirname(self.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(self.path, 'a', encoding='utf-8') as f:
            for row in self._pending:
                f.write(json.dumps(row) + '\n')
        logger.debug(f"Flushed {len(self._pending)} metrics row(s) to {self.path}")
        self._pending = []

    def reset(self):
        """Start an empty file"""
        self._pending = []
        directory = os.path.dirname(self.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        open(self.path, 'w', encoding='utf-8').close()

    def truncate_from(self, step: int):
        """Drop stored rows for steps >= step (resume after the last checkpoint)"""
        self._pending = []
        rows = read_metrics(self.path) if os.path.exists(self.path) else []
        kept = [row for row in rows if row['step'] < step]
        with open(self.path, 'w', encoding='utf-8') as f:
            for row in kept:
                f.write(json.dumps({name: row.get(name) for name in METRIC_FIELDS}) + '\n')
        if len(kept) != len(rows):
            logger.info(f"Discarded {len(rows) - len(kept)} metrics row(s) past step {step}")


def read_metrics(path: str, limit: Optional[int] = None) -> List[Dict[str, Any]]:
    rows = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if line.strip():
                rows.append(json.loads(line))
                if limit is not None and len(rows) >= limit:
                    break
    return rows
