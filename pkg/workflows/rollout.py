"""
Rollout worker
Plays episodes of the search environment with per-trajectory seeds, sequentially or on a
thread pool with results kept in submission order
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from agents.base_agent import BaseAgent
from environment.knowledge_base import Question
from environment.search_env import SearchEnvironment
from environment.trajectory import Trajectory

logger = logging.getLogger(__name__)


@dataclass
class RolloutRequest:
    question: Question
    instruction_id: int
    instruction_features: np.ndarray
    seed: int


class RolloutWorker:
    """Runs agents in a shared, immutable environment"""

    def __init__(self, env: SearchEnvironment, workers: int = 0):
        self.env = env
        self.workers = workers

    def run_episode(self, agent: BaseAgent, question: Question, instruction_id: int,
                    instruction_features: np.ndarray, seed: int) -> Trajectory:
        rng = np.random.default_rng(seed)
        episode = self.env.reset(question, instruction_id, instruction_features)
        while not episode.done:
            action = agent.select_action(episode, self.env.state_features(episode),
                                         self.env.action_mask(episode), rng)
            self.env.step(episode, action)
        return episode.trajectory

    def run_many(self, agent: BaseAgent, requests: Sequence[RolloutRequest]) -> List[Trajectory]:
        """Trajectories in the order of requests"""
        if self.workers and len(requests) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(
                    lambda r: self.run_episode(agent, r.question, r.instruction_id,
                                               r.instruction_features, r.seed),
                    requests))
        return [self.run_episode(agent, r.question, r.instruction_id, r.instruction_features, r.seed)
                for r in requests]


@dataclass
class EvaluationReport:
    count: int
    em_rate: float
    mean_tool_calls: float
    mean_turns: float

    def to_dict(self):
        return {
            'count': self.count,
            'em_rate': self.em_rate,
            'mean_tool_calls': self.mean_tool_calls,
            'mean_turns': self.mean_turns,
        }


def summarize(trajectories: Sequence[Trajectory]) -> EvaluationReport:
    if not trajectories:
        return EvaluationReport(count=0, em_rate=0.0, mean_tool_calls=0.0, mean_turns=0.0)
    return EvaluationReport(
        count=len(trajectories),
        em_rate=float(np.mean([t.reward for t in trajectories])),
        mean_tool_calls=float(np.mean([t.tool_calls for t in trajectories])),
        mean_turns=float(np.mean([t.turns_used for t in trajectories])),
    )


def evaluate(worker: RolloutWorker, agent: BaseAgent, questions: Sequence[Question],
             instruction_id: int, instruction_features: np.ndarray,
             seeds: Optional[Sequence[int]] = None) -> EvaluationReport:
    """One episode per question; greedy agents make the report deterministic"""
    seeds = seeds if seeds is not None else [q.id for q in questions]
    requests = [RolloutRequest(q, instruction_id, instruction_features, int(s))
                for q, s in zip(questions, seeds)]
    return summarize(worker.run_many(agent, requests))
