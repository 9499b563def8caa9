"""
Instruction population
Candidate instructions with moving-average importance weights, softmax sampling and
successive-halving pruning
"""

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, List, Optional

import numpy as np

from core.errors import StructuralError, UnknownCandidateError

logger = logging.getLogger(__name__)


@dataclass
class InstructionCandidate:
    """
    An instruction and its importance weight.

    weight is the mean of reward_window, or 0 while the window is empty.
    """
    id: int
    text: str
    features: np.ndarray
    window_size: int
    birth_step: int = 0
    parent_id: Optional[int] = None
    reward_window: Deque[float] = field(default=None)
    weight: float = 0.0

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if not np.all(np.isfinite(self.features)):
            raise StructuralError(f"Candidate {self.id} has non-finite features")
        if self.reward_window is None:
            self.reward_window = deque(maxlen=self.window_size)
        else:
            self.reward_window = deque(self.reward_window, maxlen=self.window_size)
        self._refresh_weight()

    def _refresh_weight(self):
        self.weight = float(np.mean(self.reward_window)) if self.reward_window else 0.0

    def push_reward(self, mean_reward: float):
        self.reward_window.append(float(mean_reward))
        self._refresh_weight()

    def reset_weight(self):
        self.reward_window.clear()
        self.weight = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'text': self.text,
            'features': [float(v) for v in self.features],
            'weight': self.weight,
            'reward_window': list(self.reward_window),
            'birth_step': self.birth_step,
            'parent_id': self.parent_id,
        }


class Population:
    """
    Ordered set of instruction candidates.

    Single writer; sampling may run concurrently with other readers.
    """

    def __init__(self, max_size: int, n_parent: int, temperature: float, window_size: int):
        if temperature <= 0:
            raise StructuralError(f"Sampling temperature must be > 0, got {temperature}")
        if not 1 <= n_parent <= max_size:
            raise StructuralError(f"Need 1 <= n_parent <= max_size, got {n_parent}, {max_size}")
        self.max_size = max_size
        self.n_parent = n_parent
        self.temperature = temperature
        self.window_size = window_size
        self.candidates: List[InstructionCandidate] = []
        self._next_id = 0

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    @property
    def ids(self) -> List[int]:
        return [c.id for c in self.candidates]

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.candidates])

    def add_candidate(self, text: str, features, birth_step: int = 0,
                      parent_id: Optional[int] = None) -> InstructionCandidate:
        if len(self.candidates) >= self.max_size:
            raise StructuralError(f"Population already holds the maximum of {self.max_size}")
        candidate = InstructionCandidate(
            id=self._next_id, text=text, features=features, window_size=self.window_size,
            birth_step=birth_step, parent_id=parent_id)
        self._next_id += 1
        self.candidates.append(candidate)
        return candidate

    def get(self, candidate_id: int) -> InstructionCandidate:
        for candidate in self.candidates:
            if candidate.id == candidate_id:
                return candidate
        raise UnknownCandidateError(candidate_id)

    def __contains__(self, candidate_id: int) -> bool:
        return any(c.id == candidate_id for c in self.candidates)

    def _require_candidates(self):
        if not self.candidates:
            raise StructuralError("Population is empty")

    def selection_probabilities(self) -> np.ndarray:
        """Softmax of weights / temperature, max-shifted"""
        self._require_candidates()
        logits = self.weights / self.temperature
        logits -= logits.max()
        exp = np.exp(logits)
        return exp / exp.sum()

    def sample_instruction(self, rng: np.random.Generator) -> int:
        """Inverse-CDF draw over the candidate ordering"""
        probabilities = self.selection_probabilities()
        cdf = np.cumsum(probabilities)
        index = int(np.searchsorted(cdf, rng.random(), side='right'))
        return self.candidates[min(index, len(self.candidates) - 1)].id

    def record_step_reward(self, candidate_id: int, mean_reward: float, step: int):
        candidate = self.get(candidate_id)
        candidate.push_reward(mean_reward)
        logger.debug(f"Step {step}: candidate {candidate_id} weight -> {candidate.weight:.4f}")

    def ranked(self) -> List[InstructionCandidate]:
        """Candidates by weight descending, lower id first on ties"""
        return sorted(self.candidates, key=lambda c: (-c.weight, c.id))

    def best_instruction(self) -> int:
        self._require_candidates()
        return self.ranked()[0].id

    def top(self, count: int) -> List[InstructionCandidate]:
        return self.ranked()[:count]

    def prune(self, step: int) -> List[int]:
        """
        Drop the floor(|P|/2) lowest-weight candidates without going below n_parent

        Returns:
            Ids removed, lowest weight last; empty when the size guard fails
        """
        size = len(self.candidates)
        if size <= self.n_parent:
            return []
        keep_count = max(size - size // 2, self.n_parent)
        ranked = self.ranked()
        kept = {c.id for c in ranked[:keep_count]}
        removed = [c.id for c in ranked[keep_count:]]
        self.candidates = [c for c in self.candidates if c.id in kept]
        if removed:
            logger.info(f"Step {step}: pruned {len(removed)} instruction(s) {removed}, "
                        f"{len(self.candidates)} remain")
        return removed

    def replace_candidates(self, candidates: List[InstructionCandidate]):
        """Install a new member list (evolution); ids must be unique and the size within bounds"""
        ids = [c.id for c in candidates]
        if len(set(ids)) != len(ids):
            raise StructuralError(f"Duplicate candidate ids {ids}")
        if not 1 <= len(candidates) <= self.max_size:
            raise StructuralError(f"Population size {len(candidates)} outside [1, {self.max_size}]")
        self.candidates = list(candidates)
        self._next_id = max(self._next_id, max(ids) + 1)

    def new_candidate(self, text: str, features, birth_step: int,
                      parent_id: Optional[int]) -> InstructionCandidate:
        """Detached candidate holding the next id, for building a replacement member list"""
        candidate = InstructionCandidate(
            id=self._next_id, text=text, features=features, window_size=self.window_size,
            birth_step=birth_step, parent_id=parent_id)
        self._next_id += 1
        return candidate

    def to_dict(self) -> Dict[str, Any]:
        return {
            'max_size': self.max_size,
            'n_parent': self.n_parent,
            'temperature': self.temperature,
            'window_size': self.window_size,
            'next_id': self._next_id,
            'candidates': [c.to_dict() for c in self.candidates],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Population':
        population = cls(data['max_size'], data['n_parent'], data['temperature'], data['window_size'])
        for row in data['candidates']:
            population.candidates.append(InstructionCandidate(
                id=row['id'], text=row['text'], features=row['features'],
                window_size=population.window_size, birth_step=row['birth_step'],
                parent_id=row['parent_id'], reward_window=deque(row['reward_window'])))
        population._next_id = data['next_id']
        return population

    def save(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path: str) -> 'Population':
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))
