from .base_agent import BaseAgent
from .policy_agent import PolicyAgent
from .scripted_agents import OracleAgent, BroadSearchAgent, EarlyAnswerAgent
from .agent_registry import AgentRegistry
