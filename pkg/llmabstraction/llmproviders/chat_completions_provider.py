"""
Chat Completions Provider
Posts {model, messages, temperature} to any chat-completions compatible HTTP endpoint with
bounded retries and linear backoff
"""

import time
from typing import Dict, List, Optional, Any

import requests

from core.errors import GeneratorUnavailableError
from ..llmcore.llm_facade import LLMFacade, LLMResponse


class ChatCompletionsFacade(LLMFacade):
    """HTTP facade; raises GeneratorUnavailableError once every attempt has failed"""

    def __init__(self, model_name: str, provider_name: str = 'chat_completions',
                 api_key: Optional[str] = None, config: Optional[Dict[str, Any]] = None):
        super().__init__(model_name, provider_name, api_key, config)
        self.endpoint = self.config.get('endpoint', '')
        self.timeout = float(self.config.get('timeout', 60.0))
        self.max_retries = int(self.config.get('max_retries', 3))
        self.retry_backoff = float(self.config.get('retry_backoff', 1.0))

    def _headers(self) -> Dict[str, str]:
        headers = {'Content-Type': 'application/json'}
        if self.api_key:
            headers['Authorization'] = f"Bearer {self.api_key}"
        return headers

    def chat(self, messages: List[Dict[str, str]], **kwargs) -> LLMResponse:
        if not self.endpoint:
            raise GeneratorUnavailableError("No generator endpoint configured")

        body = {
            'model': self.model_name,
            'messages': messages,
            'temperature': kwargs.get('temperature', self.config.get('temperature', 1.0)),
        }
        last_error = None
        for attempt in range(self.max_retries):
            try:
                response = requests.post(self.endpoint, json=body, headers=self._headers(),
                                         timeout=self.timeout)
                response.raise_for_status()
                data = response.json()
                content = data['choices'][0]['message']['content']
                return LLMResponse(
                    content=content,
                    model=data.get('model', self.model_name),
                    provider=self.provider_name,
                    usage=data.get('usage'),
                    metadata={'attempts': attempt + 1, 'temperature': body['temperature']}
                )
            except (requests.RequestException, KeyError, IndexError, TypeError, ValueError) as exc:
                last_error = exc
                self.logger.warning(f"attempt {attempt + 1}/{self.max_retries} failed: {exc!r}")
                if attempt < self.max_retries - 1:
                    time.sleep(self.retry_backoff * (1 + attempt))

        raise GeneratorUnavailableError(
            f"Generator at {self.endpoint} failed after {self.max_retries} attempts: {last_error!r}")
