"""
Replay buffer
FIFO store of (instruction, question, trajectory, reward, step) records that feeds failure
examples to reflection and validation questions to candidate verification
"""

import json
import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Deque, Dict, Iterator, List, Optional

import numpy as np

from core.errors import StructuralError
from environment.trajectory import Trajectory

logger = logging.getLogger(__name__)


@dataclass
class ReplayRecord:
    instruction_id: int
    question_id: int
    trajectory: Trajectory
    reward: float
    step: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'instruction_id': self.instruction_id,
            'question_id': self.question_id,
            'trajectory': self.trajectory.to_dict(),
            'reward': self.reward,
            'step': self.step,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ReplayRecord':
        return cls(
            instruction_id=data['instruction_id'],
            question_id=data['question_id'],
            trajectory=Trajectory.from_dict(data['trajectory']),
            reward=data['reward'],
            step=data['step'],
        )


class ReplayBuffer:
    """
    Ring buffer with strict FIFO eviction.

    Single writer; the sampling methods only read.
    """

    def __init__(self, capacity: int = 4096, failure_threshold: float = 0.5, recency_steps: int = 5):
        if capacity < 1:
            raise StructuralError(f"Buffer capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.failure_threshold = failure_threshold
        self.recency_steps = recency_steps
        self._records: Deque[ReplayRecord] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[ReplayRecord]:
        return iter(self._records)

    def push(self, record: ReplayRecord):
        if not 0.0 <= record.reward <= 1.0:
            raise StructuralError(f"Reward {record.reward} outside [0, 1]")
        if self._records and record.step < self._records[-1].step:
            raise StructuralError(
                f"Record step {record.step} precedes the latest stored step {self._records[-1].step}")
        self._records.append(record)

    def _latest_step(self, current_step: Optional[int]) -> Optional[int]:
        steps = [r.step for r in self._records if current_step is None or r.step <= current_step]
        return max(steps) if steps else None

    def sample_failures(self, count: int, current_step: Optional[int],
                        rng: np.random.Generator) -> List[ReplayRecord]:
        """
        Uniformly sample records with reward below the failure threshold

        Looks at the most recent stored step first, then the last recency_steps steps, then
        the whole buffer, widening only while fewer than count failures are in reach.

        Args:
            count: Number of records wanted
            current_step: Ignore records newer than this step (None for no bound)
            rng: Random generator

        Returns:
            Up to count distinct records; fewer only when the buffer holds fewer failures
        """
        if count < 1:
            raise StructuralError(f"Failure sample count must be >= 1, got {count}")
        latest = self._latest_step(current_step)
        if latest is None:
            return []

        failures = [r for r in self._records
                    if r.reward < self.failure_threshold and (current_step is None or r.step <= current_step)]
        if not failures:
            return []

        windows = [latest, latest - self.recency_steps + 1, None]
        pool: List[ReplayRecord] = []
        for lower in windows:
            pool = failures if lower is None else [r for r in failures if r.step >= lower]
            if len(pool) >= count:
                break

        if len(pool) <= count:
            return list(pool)
        chosen = rng.choice(len(pool), size=count, replace=False)
        return [pool[i] for i in sorted(int(i) for i in chosen)]

    def validation_set(self, size: int, rng: np.random.Generator) -> List[int]:
        """Up to size distinct question ids drawn uniformly from the stored records"""
        if size < 1:
            raise StructuralError(f"Validation set size must be >= 1, got {size}")
        latest: Dict[int, int] = {}
        for position, record in enumerate(self._records):
            latest[record.question_id] = position
        # Most recent occurrence decides each id's place in the ordering
        ordered = [qid for qid, _ in sorted(latest.items(), key=lambda item: item[1])]
        if not ordered:
            return []
        if len(ordered) <= size:
            return ordered
        chosen = rng.choice(len(ordered), size=size, replace=False)
        return [ordered[int(i)] for i in chosen]

    def copy(self) -> 'ReplayBuffer':
        """Shallow copy; records are never mutated after insertion"""
        clone = ReplayBuffer(self.capacity, self.failure_threshold, self.recency_steps)
        clone._records = deque(self._records, maxlen=self.capacity)
        return clone

    def count_failures(self) -> int:
        return sum(1 for r in self._records if r.reward < self.failure_threshold)

    def save(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            for record in self._records:
                f.write(json.dumps(record.to_dict()) + '\n')

    @classmethod
    def load(cls, path: str, capacity: int = 4096, failure_threshold: float = 0.5,
             recency_steps: int = 5) -> 'ReplayBuffer':
        buffer = cls(capacity, failure_threshold, recency_steps)
        with open(path, 'r', encoding='utf-8') as f:
            for line in f:
                if line.strip():
                    buffer.push(ReplayRecord.from_dict(json.loads(line)))
        return buffer
