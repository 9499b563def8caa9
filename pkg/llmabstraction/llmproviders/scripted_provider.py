"""
Scripted Provider Implementation
Offline stand-in for the instruction optimizer: recognizes the three optimizer prompts and answers
with deterministic <ins_k> candidates, so proposer ablations run without a network
"""

import re
import zlib
from typing import Dict, List, Optional, Any

import numpy as np

from environment.instruction_features import NUM_FLAGS, flags_from_text, splice_flags
from ..llmcore.llm_facade import LLMFacade, LLMResponse

# Flags whose wording steers the prior policy toward chain-following behavior
HELPFUL_FLAGS = [0, 1, 2, 3, 4, 5, 6]

# Rewordings that carry no lexicon flag
FILLER_SENTENCES = [
    'Read the question carefully.',
    'Keep your reasoning short.',
    'Be concise and precise.',
    'Stay focused on the question.',
    'Use the tags exactly as shown.',
    'Answer with a short phrase.',
]

_INS0 = re.compile(r'<ins_0>\s*(.*?)\s*</ins_0>', re.DOTALL)
_HISTORY_ENTRY = re.compile(r'<ins_(\d+)>\s*(.*?)\s*</ins_\1>\s*<score_\1>\s*(\d+)\s*</score_\1>', re.DOTALL)
_COUNT = re.compile(r'giving (\d+) different|Give (\d+) different')


def detect_kind(prompt: str) -> str:
    if '<history>' in prompt:
        return 'history'
    if 'Analyze the reasons behind these mistakes' in prompt:
        return 'reflection'
    return 'paraphrase'


class ScriptedFacade(LLMFacade):
    """
    Deterministic optimizer stub.

    For proposer kinds listed in config['superior_kinds'] each candidate adds one helpful flag
    the parent lacks; paraphrase rewords without changing flags; history toggles one random flag.
    The same prompt always yields the same response.
    """

    def __init__(self, model_name: str, provider_name: str = 'scripted',
                 api_key: Optional[str] = None, config: Optional[Dict[str, Any]] = None):
        super().__init__(model_name, provider_name, api_key, config)
        self.superior_kinds = list(self.config.get('superior_kinds', ['reflection']))

    def _parent_text(self, prompt: str, kind: str) -> str:
        if kind == 'history':
            entries = _HISTORY_ENTRY.findall(prompt)
            if entries:
                best = max(entries, key=lambda e: (int(e[2]), -int(e[0])))
                return best[1]
        match = _INS0.search(prompt)
        return match.group(1) if match else ''

    def _requested(self, prompt: str) -> int:
        match = _COUNT.search(prompt)
        if not match:
            return 6
        return int(match.group(1) or match.group(2))

    def _superior(self, parent: str, count: int) -> List[str]:
        flags = flags_from_text(parent)
        missing = [i for i in HELPFUL_FLAGS if flags[i] == 0]
        if not missing:
            return self._paraphrase(parent, count)
        candidates = []
        for k in range(count):
            target = flags.copy()
            target[missing[k % len(missing)]] = 1.0
            candidates.append(splice_flags(parent, target))
        return candidates

    def _paraphrase(self, parent: str, count: int) -> List[str]:
        base = parent
        for sentence in FILLER_SENTENCES:
            base = base.replace(f" {sentence}", '').replace(sentence, '')
        base = base.strip()
        return [f"{FILLER_SENTENCES[k % len(FILLER_SENTENCES)]} {base}".strip() for k in range(count)]

    def _toggle(self, parent: str, count: int, rng: np.random.Generator) -> List[str]:
        flags = flags_from_text(parent)
        candidates = []
        for _ in range(count):
            target = flags.copy()
            index = int(rng.integers(NUM_FLAGS))
            target[index] = 1.0 - target[index]
            candidates.append(splice_flags(parent, target))
        return candidates

    def chat(self, messages: List[Dict[str, str]], **kwargs) -> LLMResponse:
        prompt = messages[-1]['content'] if messages else ''
        kind = detect_kind(prompt)
        parent = self._parent_text(prompt, kind)
        count = self._requested(prompt)
        rng = np.random.default_rng(zlib.crc32(prompt.encode('utf-8')))

        if kind in self.superior_kinds:
            candidates = self._superior(parent, count)
        elif kind == 'paraphrase':
            candidates = self._paraphrase(parent, count)
        else:
            candidates = self._toggle(parent, count, rng)

        body = '\n'.join(f"<ins_{i}>\n{text}\n</ins_{i}>" for i, text in enumerate(candidates, 1))
        content = f"Here are {len(candidates)} improved candidates.\n{body}"
        return LLMResponse(
            content=content,
            model=self.model_name,
            provider=self.provider_name,
            usage={'input_tokens': len(prompt.split()), 'output_tokens': len(content.split())},
            metadata={'scripted': True, 'kind': kind, 'temperature': kwargs.get('temperature', 1.0)}
        )
