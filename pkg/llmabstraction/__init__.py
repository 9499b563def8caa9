"""
Generator abstraction
Builds the client the instruction proposers talk to
"""

import os
from typing import Optional

from core.run_config import GeneratorConfig
from .llmcore import LLMFacade, LLMResponse, LLMClient, LLMProviderFactory
from .llmproviders import ChatCompletionsFacade, ScriptedFacade


def create_generator_client(settings: GeneratorConfig, output_dir: Optional[str] = None) -> LLMClient:
    """
    Facade plus client for a run's generator settings

    Args:
        settings: Generator section of the run configuration
        output_dir: Directory receiving the audit file (relative audit paths are joined to it)
    """
    facade = LLMProviderFactory().create_facade(
        settings.provider,
        settings.model,
        api_key_env=settings.api_key_env,
        config={
            'endpoint': settings.endpoint,
            'timeout': settings.timeout,
            'max_retries': settings.max_retries,
            'temperature': settings.temperature,
            'superior_kinds': list(settings.superior_kinds),
        })
    audit_path = settings.audit_file or None
    if audit_path and output_dir and not os.path.isabs(audit_path):
        audit_path = os.path.join(output_dir, audit_path)
    client = LLMClient(facade, audit_path=audit_path)
    client.set_default_params(temperature=settings.temperature)
    return client


__all__ = [
    'LLMFacade',
    'LLMResponse',
    'LLMClient',
    'LLMProviderFactory',
    'ChatCompletionsFacade',
    'ScriptedFacade',
    'create_generator_client',
]
