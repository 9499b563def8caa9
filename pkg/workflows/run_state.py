"""
Run state
Everything a co-evolution run needs to continue, and its checkpoint directory layout
"""

import json
import logging
import os
from dataclasses import dataclass, field, asdict
from typing import Any, Dict

from core.errors import StructuralError
from core.rng_streams import RngStreams
from core.run_config import RunConfig
from environment.search_env import ActionSet, MAX_DEPTH
from policy.softmax_policy import PolicyParams
from population.instruction_population import Population
from replay.replay_buffer import ReplayBuffer

logger = logging.getLogger(__name__)

CONFIG_FILE = 'config.json'
POPULATION_FILE = 'population.json'
BUFFER_FILE = 'buffer.jsonl'
POLICY_FILE = 'policy.bin'
RNG_FILE = 'rng.json'
METRICS_FILE = 'metrics.jsonl'
SUMMARY_FILE = 'summary.json'


@dataclass
class RunCounters:
    generator_calls: int = 0
    verification_rollouts: int = 0
    evolution_events: int = 0
    prune_events: int = 0
    buffer_insertions: int = 0
    offline_evolution_done: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunCounters':
        return cls(**data)


@dataclass
class RunState:
    step: int
    population: Population
    buffer: ReplayBuffer
    params: PolicyParams
    rngs: RngStreams
    counters: RunCounters = field(default_factory=RunCounters)

    def save(self, directory: str, config: RunConfig):
        """Write the checkpoint files; each file is replaced whole"""
        os.makedirs(directory, exist_ok=True)
        _write_json(os.path.join(directory, CONFIG_FILE), config.to_dict())
        _write_json(os.path.join(directory, POPULATION_FILE), self.population.to_dict())
        _write_json(os.path.join(directory, RNG_FILE), {
            'step': self.step,
            'counters': self.counters.to_dict(),
            'rng': self.rngs.state_dict(),
        })
        buffer_tmp = os.path.join(directory, BUFFER_FILE + '.tmp')
        self.buffer.save(buffer_tmp)
        os.replace(buffer_tmp, os.path.join(directory, BUFFER_FILE))
        policy_tmp = os.path.join(directory, POLICY_FILE + '.tmp')
        self.params.save(policy_tmp)
        os.replace(policy_tmp, os.path.join(directory, POLICY_FILE))
        logger.debug(f"Checkpoint at step {self.step} written to {directory}")

    @classmethod
    def load(cls, directory: str, config: RunConfig) -> 'RunState':
        for name in (POPULATION_FILE, BUFFER_FILE, POLICY_FILE, RNG_FILE):
            if not os.path.exists(os.path.join(directory, name)):
                raise StructuralError(f"Checkpoint {directory} is missing {name}")
        with open(os.path.join(directory, RNG_FILE), 'r', encoding='utf-8') as f:
            progress = json.load(f)
        params = PolicyParams.load(os.path.join(directory, POLICY_FILE))
        expected = ActionSet(MAX_DEPTH, config.memory_slots).size
        if params.num_actions != expected:
            raise StructuralError(
                f"Policy in {directory} has {params.num_actions} actions, the configured action set {expected}")
        return cls(
            step=int(progress['step']),
            population=Population.load(os.path.join(directory, POPULATION_FILE)),
            buffer=ReplayBuffer.load(os.path.join(directory, BUFFER_FILE), config.buffer_capacity,
                                     config.failure_threshold, config.recency_steps),
            params=params,
            rngs=RngStreams.from_state_dict(progress['rng']),
            counters=RunCounters.from_dict(progress['counters']),
        )


def load_run_config(directory: str) -> RunConfig:
    path = os.path.join(directory, CONFIG_FILE)
    if not os.path.exists(path):
        raise StructuralError(f"No {CONFIG_FILE} in checkpoint {directory}")
    with open(path, 'r', encoding='utf-8') as f:
        return RunConfig.from_dict(json.load(f)).validate()


def _write_json(path: str, payload: Dict[str, Any]):
    tmp = path + '.tmp'
    with open(tmp, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2)
    os.replace(tmp, path)
