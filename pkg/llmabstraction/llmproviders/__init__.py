"""
Generator abstraction - providers module
Importing this package registers the built-in providers with the factory
"""

from ..llmcore.llm_provider_factory import LLMProviderFactory
from .chat_completions_provider import ChatCompletionsFacade
from .scripted_provider import ScriptedFacade

LLMProviderFactory().register_provider('chat_completions', ChatCompletionsFacade)
LLMProviderFactory().register_provider('scripted', ScriptedFacade)

__all__ = [
    'ChatCompletionsFacade',
    'ScriptedFacade',
]
