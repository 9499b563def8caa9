"""
Policy Agent
Acts with the featurized softmax policy, either sampling or greedily
"""

import numpy as np

from environment.search_env import Episode
from policy.softmax_policy import PolicyParams, action_probabilities
from .base_agent import BaseAgent


class PolicyAgent(BaseAgent):
    """
    Samples from pi(.|state, instruction) under one copy of the parameters.

    Rollouts for training use which='old' so the recorded behavior policy is theta_old.
    """

    def __init__(self, params: PolicyParams, which: str = 'current', greedy: bool = False):
        super().__init__(
            agent_id='policy_greedy' if greedy else 'policy',
            name='Policy Agent',
            description='Softmax policy over the search environment action set',
            config={'which': which, 'greedy': greedy}
        )
        self.params = params
        self.which = which
        self.greedy = greedy

    def select_action(self, episode: Episode, state_features: np.ndarray, action_mask: np.ndarray,
                      rng: np.random.Generator) -> int:
        probabilities = action_probabilities(
            self.params, self.which, state_features, episode.instruction_features, action_mask)
        if self.greedy:
            return int(np.argmax(probabilities))
        cdf = np.cumsum(probabilities)
        return int(min(np.searchsorted(cdf, rng.random(), side='right'), len(probabilities) - 1))
