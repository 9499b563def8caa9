"""
Scripted agents
Fixed strategies used as environment sanity bounds and as evaluation baselines
"""

import numpy as np

from environment.search_env import Episode
from .base_agent import BaseAgent


def answer_latest_hit(episode: Episode) -> int:
    position = episode.memory_position(episode.latest_hit_value)
    if position is None or position >= episode.actions.memory_slots:
        return episode.actions.guess
    return episode.actions.answer(position)


class OracleAgent(BaseAgent):
    """Follows the chain hop by hop, then answers with the last hit"""

    def __init__(self):
        super().__init__('oracle', 'Oracle Agent', 'Resolves every hop before answering')

    def select_action(self, episode: Episode, state_features: np.ndarray, action_mask: np.ndarray,
                      rng: np.random.Generator) -> int:
        if episode.next_slot is not None:
            return episode.actions.search(episode.next_slot)
        return answer_latest_hit(episode)


class BroadSearchAgent(BaseAgent):
    """One search for the whole question, then answers with whatever came back"""

    def __init__(self):
        super().__init__('broad', 'Broad Search Agent', 'Single broad query followed by an answer')

    def select_action(self, episode: Episode, state_features: np.ndarray, action_mask: np.ndarray,
                      rng: np.random.Generator) -> int:
        if episode.trajectory.turns_used == 0:
            return episode.actions.search(0)
        return answer_latest_hit(episode)


class EarlyAnswerAgent(BaseAgent):
    """Takes a single correct hop and answers immediately"""

    def __init__(self):
        super().__init__('early', 'Early Answer Agent', 'Answers after the first hop')

    def select_action(self, episode: Episode, state_features: np.ndarray, action_mask: np.ndarray,
                      rng: np.random.Generator) -> int:
        if episode.trajectory.turns_used == 0:
            return episode.actions.search(episode.next_slot)
        return answer_latest_hit(episode)
