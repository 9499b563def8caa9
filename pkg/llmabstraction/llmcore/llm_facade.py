"""
LLM Facade Abstract Base Class
Unified text-in/text-out interface for instruction generators
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Any
from dataclasses import dataclass, field
from datetime import datetime
import logging


@dataclass
class LLMResponse:
    """
    Standardized response from a generator call.

    Attributes:
        content: The generated text content
        model: Model that generated the response
        provider: Provider name
        usage: Token usage statistics when the backend reports them
        metadata: Additional response metadata
        timestamp: When the response was generated
        error: Error message if the request failed
    """
    content: str
    model: str
    provider: str
    usage: Optional[Dict[str, int]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)
    timestamp: datetime = None
    error: Optional[str] = None

    def __post_init__(self):
        if self.timestamp is None:
            self.timestamp = datetime.now()

    @property
    def ok(self) -> bool:
        return self.error is None


class LLMFacade(ABC):
    """
    Abstract facade for generator backends.

    Each provider module implements this for its transport; callers only see
    generate() and chat().
    """

    def __init__(self, model_name: str, provider_name: str,
                 api_key: Optional[str] = None, config: Optional[Dict[str, Any]] = None):
        """
        Initialize the LLM facade.

        Args:
            model_name: Name/identifier of the model
            provider_name: Name of the provider
            api_key: Bearer token for authentication
            config: Provider-specific configuration
        """
        self.model_name = model_name
        self.provider_name = provider_name
        self.api_key = api_key
        self.config = config or {}
        self.logger = logging.getLogger(f"{__name__}.{provider_name}.{model_name}")

    @abstractmethod
    def chat(self, messages: List[Dict[str, str]], **kwargs) -> LLMResponse:
        """
        Generate a chat completion.

        Args:
            messages: List of {'role': ..., 'content': ...} dictionaries
            **kwargs: Generation parameters (temperature)

        Returns:
            LLMResponse containing the generated content
        """
        pass

    def generate(self, prompt: str, **kwargs) -> LLMResponse:
        """Single-turn convenience wrapper around chat()"""
        return self.chat([{'role': 'user', 'content': prompt}], **kwargs)

    def get_model_info(self) -> Dict[str, Any]:
        return {
            'model_name': self.model_name,
            'provider': self.provider_name,
            'config': {k: v for k, v in self.config.items() if k != 'api_key'}
        }

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}(model={self.model_name}, provider={self.provider_name})>"
