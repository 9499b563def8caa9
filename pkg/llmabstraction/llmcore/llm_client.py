"""
LLM Client Implementation
Wraps a facade with interaction history and an append-only audit log of every request/response pair
"""

import json
import logging
import os
import threading
from collections import deque
from typing import Dict, List, Optional, Any

from .llm_facade import LLMFacade, LLMResponse


class LLMInteractionHistory:
    """
    Bounded buffer of past interactions.
    """

    def __init__(self, max_history: int = 50):
        self.max_history = max_history
        self._history: deque = deque(maxlen=max_history)

    def add_interaction(self, prompt: str, response: LLMResponse):
        self._history.append({
            'prompt': prompt,
            'response': response.content,
            'model': response.model,
            'provider': response.provider,
            'timestamp': response.timestamp,
            'error': response.error
        })

    def get_history(self, n: Optional[int] = None) -> List[Dict[str, Any]]:
        """
        Get interaction history.

        Args:
            n: Number of recent interactions to return (None for all)

        Returns:
            List of interaction dictionaries
        """
        if n is None:
            return list(self._history)
        return list(self._history)[-n:]

    def clear(self):
        self._history.clear()

    def size(self) -> int:
        return len(self._history)


class LLMClient:
    """
    Main client for generator calls.

    Never raises for backend failures: errors come back in LLMResponse.error so the
    caller decides on a fallback. Every call, failed or not, is appended to the audit file.
    """

    def __init__(self, facade: LLMFacade, audit_path: Optional[str] = None, history_size: int = 50):
        """
        Initialize LLM client.

        Args:
            facade: LLMFacade instance for the underlying model
            audit_path: JSONL file receiving one line per request/response pair
            history_size: Maximum number of interactions to keep in history
        """
        self.facade = facade
        self.audit_path = audit_path
        self.history = LLMInteractionHistory(max_history=history_size)
        self.logger = logging.getLogger(f"{__name__}.{facade.model_name}")
        self._default_params: Dict[str, Any] = {}
        self._audit_lock = threading.Lock()
        self.call_count = 0

    def set_default_params(self, **kwargs):
        self._default_params.update(kwargs)

    def generate(self, prompt: str, **kwargs) -> LLMResponse:
        """
        Generate a response from the model.

        Args:
            prompt: Input prompt
            **kwargs: Generation parameters, merged over the defaults

        Returns:
            LLMResponse object
        """
        params = {**self._default_params, **kwargs}
        self.call_count += 1
        try:
            response = self.facade.generate(prompt, **params)
        except Exception as e:
            self.logger.error(f"Error generating response: {str(e)}")
            response = LLMResponse(
                content="",
                model=self.facade.model_name,
                provider=self.facade.provider_name,
                error=str(e)
            )

        self.history.add_interaction(prompt, response)
        self._audit(prompt, params, response)
        return response

    def _audit(self, prompt: str, params: Dict[str, Any], response: LLMResponse):
        if not self.audit_path:
            return
        entry = {
            'timestamp': response.timestamp.isoformat(),
            'provider': response.provider,
            'model': response.model,
            'request': {'messages': [{'role': 'user', 'content': prompt}], 'params': params},
            'response': response.content,
            'usage': response.usage,
            'error': response.error,
        }
        with self._audit_lock:
            directory = os.path.dirname(self.audit_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(self.audit_path, 'a', encoding='utf-8') as f:
                f.write(json.dumps(entry) + '\n')

    def get_history(self, n: Optional[int] = None) -> List[Dict[str, Any]]:
        return self.history.get_history(n)
