"""
Base Agent
Foundation for everything that picks actions in the search environment
"""

from abc import ABC, abstractmethod
from typing import Dict, Any

import numpy as np

from environment.search_env import Episode


class BaseAgent(ABC):
    """
    Base class for action selectors.

    Agents are stateless between calls; everything a decision needs comes from
    the episode, its state features and the rollout's random stream.
    """

    def __init__(self, agent_id: str, name: str, description: str, config: Dict[str, Any] = None):
        self.agent_id = agent_id
        self.name = name
        self.description = description
        self.config = config or {}

    @abstractmethod
    def select_action(self, episode: Episode, state_features: np.ndarray, action_mask: np.ndarray,
                      rng: np.random.Generator) -> int:
        """Choose the next action id, one the mask allows, for a trajectory in progress"""
        pass
