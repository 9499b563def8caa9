"""
Generator abstraction - core module
Facade interface, client with audit log, and provider registry
"""

from .llm_facade import LLMFacade, LLMResponse
from .llm_client import LLMClient, LLMInteractionHistory
from .llm_provider_factory import LLMProviderFactory

__all__ = [
    'LLMFacade',
    'LLMResponse',
    'LLMClient',
    'LLMInteractionHistory',
    'LLMProviderFactory',
]
