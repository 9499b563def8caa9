"""
LLM Provider Factory
Registry of facade classes keyed by provider name, building configured facades on demand
"""

from typing import Dict, Optional, Any, Type, List
import logging
import os

from core.errors import ConfigError
from .llm_facade import LLMFacade


class LLMProviderFactory:
    """
    Singleton registry of generator facade classes.

    Facades are built fresh per call: each run owns its generator and audit file.
    """

    _instance = None
    _provider_registry: Dict[str, Type[LLMFacade]] = {}

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(LLMProviderFactory, cls).__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        """Initialize the factory (only once)."""
        if not self._initialized:
            self.logger = logging.getLogger(__name__)
            self._initialized = True

    def register_provider(self, provider_name: str, facade_class: Type[LLMFacade]):
        self._provider_registry[provider_name.lower()] = facade_class
        self.logger.debug(f"Registered provider: {provider_name}")

    def get_available_providers(self) -> List[str]:
        return list(self._provider_registry.keys())

    def is_provider_registered(self, provider_name: str) -> bool:
        return provider_name.lower() in self._provider_registry

    def create_facade(self, provider_name: str, model_name: str,
                      api_key_env: Optional[str] = None,
                      config: Optional[Dict[str, Any]] = None) -> LLMFacade:
        """
        Build a facade for a registered provider

        Args:
            provider_name: Registered provider name
            model_name: Model identifier passed to the backend
            api_key_env: Name of the environment variable holding the bearer token
            config: Provider-specific configuration

        Returns:
            LLMFacade instance

        Raises:
            ConfigError: If the provider is not registered
        """
        provider_key = provider_name.lower()
        if provider_key not in self._provider_registry:
            raise ConfigError(
                f"provider '{provider_name}' not registered, available providers: "
                f"{self.get_available_providers()}", 'generator.provider')

        api_key = os.environ.get(api_key_env) if api_key_env else None
        facade_class = self._provider_registry[provider_key]
        return facade_class(model_name=model_name, provider_name=provider_key,
                            api_key=api_key, config=config)
