"""
Prompt builder
Fills the paraphrase, history and reflection optimizer templates
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from core.errors import StructuralError

logger = logging.getLogger(__name__)

TEXT_KINDS = ('paraphrase', 'history', 'reflection')


@dataclass
class PromptContext:
    """
    What a template needs beyond the parent text.

    history: (instruction text, weight in [0, 1]) pairs
    failures: (rendered response, correct answer) pairs
    """
    history: List[Tuple[str, float]] = field(default_factory=list)
    failures: List[Tuple[str, str]] = field(default_factory=list)
    num_candidates: int = 6


def score_0_100(weight: float) -> int:
    """Weight in [0, 1] as an integer score, halves rounded up"""
    return int(weight * 100 + 0.5)


class PromptBuilder:
    """Templates are text files with {instruction}, {history}, {examples} and {num_candidates} slots"""

    def __init__(self, templates_dir: str):
        self.templates_dir = templates_dir
        self._templates: Dict[str, str] = {}
        for kind in TEXT_KINDS:
            path = os.path.join(templates_dir, f"{kind}.txt")
            if not os.path.exists(path):
                raise StructuralError(f"Missing prompt template: {path}")
            with open(path, 'r', encoding='utf-8') as f:
                self._templates[kind] = f.read()

    def template(self, kind: str) -> str:
        if kind not in self._templates:
            raise StructuralError(f"No template for proposer kind '{kind}'")
        return self._templates[kind]

    def build_prompt(self, kind: str, parent_text: str, context: Optional[PromptContext] = None) -> str:
        """
        Render the optimizer prompt for one parent

        Raises:
            StructuralError: Unknown kind, or reflection without failure examples
        """
        context = context or PromptContext()
        template = self.template(kind)
        if kind == 'paraphrase':
            return template.format(instruction=parent_text, num_candidates=context.num_candidates)
        if kind == 'history':
            entries = context.history or [(parent_text, 0.0)]
            blocks = [
                f"<ins_{i}>\n{text}\n</ins_{i}>\n\n<score_{i}>\n{score_0_100(weight)}\n</score_{i}>"
                for i, (text, weight) in enumerate(entries, 1)
            ]
            return template.format(history='\n\n'.join(blocks), num_candidates=context.num_candidates)
        if not context.failures:
            raise StructuralError("Reflection needs at least one failure example")
        examples = '\n\n'.join(
            f"<example>\nResponse: {response}\nCorrect answer: {answer}\n</example>"
            for response, answer in context.failures
        )
        return template.format(instruction=parent_text, examples=examples,
                               num_candidates=context.num_candidates)
