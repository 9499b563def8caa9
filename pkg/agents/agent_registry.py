"""
Agent Registry
Name -> agent factory lookup used by evaluation
"""

from typing import Callable, Dict, List, Optional

from core.errors import ConfigError
from policy.softmax_policy import PolicyParams
from .base_agent import BaseAgent
from .policy_agent import PolicyAgent
from .scripted_agents import OracleAgent, BroadSearchAgent, EarlyAnswerAgent


class AgentRegistry:
    """Registry of agent factories keyed by kind"""

    def __init__(self):
        self._factories: Dict[str, Callable[[Optional[PolicyParams]], BaseAgent]] = {}
        self.register('policy', lambda params: PolicyAgent(params, which='current', greedy=True))
        self.register('oracle', lambda params: OracleAgent())
        self.register('broad', lambda params: BroadSearchAgent())
        self.register('early', lambda params: EarlyAnswerAgent())

    def register(self, kind: str, factory: Callable[[Optional[PolicyParams]], BaseAgent]):
        self._factories[kind.lower()] = factory

    def available(self) -> List[str]:
        return sorted(self._factories)

    def create(self, kind: str, params: Optional[PolicyParams] = None) -> BaseAgent:
        factory = self._factories.get(kind.lower())
        if factory is None:
            raise ConfigError(f"unknown agent '{kind}', available: {self.available()}", 'agent')
        if kind.lower() == 'policy' and params is None:
            raise ConfigError("the policy agent needs loaded parameters", 'agent')
        return factory(params)
