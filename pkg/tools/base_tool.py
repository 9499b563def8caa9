"""
Base Tool
Foundation for the tool engine the agent calls during a rollout
"""

from abc import ABC, abstractmethod
from typing import Dict, Any, List


class BaseTool(ABC):
    """
    Base class for tools.

    execute() returns the result dictionary shape used across the project:
    {'success': True, 'result': ...} or {'success': False, 'error': '...'}.
    Tools hold no per-call state so one instance can serve concurrent rollouts.
    """

    def __init__(self, tool_name: str, description: str, config: Dict[str, Any] = None):
        self.tool_name = tool_name
        self.description = description
        self.config = config or {}

    @abstractmethod
    def execute(self, **kwargs) -> Dict[str, Any]:
        """Execute the tool"""
        pass

    def required_parameters(self) -> List[str]:
        return []

    def missing_parameters(self, kwargs: Dict[str, Any]) -> List[str]:
        return [name for name in self.required_parameters() if kwargs.get(name) is None]
