"""
Instruction lexicon
Maps instruction text to the strategy-feature vector read by the policy, and edits text so a
chosen set of strategy flags is present
"""

import re
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

NUM_FLAGS = 8
NUM_KNOBS = 4
FEATURE_DIM = NUM_FLAGS + NUM_KNOBS

_SENTENCE_SPLIT = re.compile(r'(?<=[.!?])\s+')


class LexiconEntry(NamedTuple):
    name: str
    pattern: 're.Pattern'
    phrase: str


LEXICON: List[LexiconEntry] = [
    LexiconEntry('step_by_step', re.compile(r'step[- ]by[- ]step'),
                 'Think step-by-step before every action.'),
    LexiconEntry('individually', re.compile(r'individually'),
                 'Search for each entity individually.'),
    LexiconEntry('no_whole_question', re.compile(r'never search for the entire question'),
                 'Never search for the entire question.'),
    LexiconEntry('analyze_results', re.compile(r'analyze the results'),
                 'After each search, analyze the results.'),
    LexiconEntry('verify', re.compile(r'verif'),
                 'Verify each fact before answering.'),
    LexiconEntry('answer_format', re.compile(r'\bformat'),
                 'Follow the answer format exactly.'),
    LexiconEntry('plan', re.compile(r'\bplan\b'),
                 'Make a plan of the hops needed.'),
    LexiconEntry('search_freely', re.compile(r'as many times'),
                 'You can search as many times as you want.'),
]

FLAG_NAMES = [entry.name for entry in LEXICON]


def flags_from_text(text: str) -> np.ndarray:
    """0/1 vector of lexicon matches on the lower-cased text"""
    lowered = (text or '').lower()
    return np.array([1.0 if entry.pattern.search(lowered) else 0.0 for entry in LEXICON])


def instruction_features_from_text(text: str, knobs: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Encode an instruction into its strategy-feature vector

    Args:
        text: Instruction text
        knobs: Continuous strategy knobs in [-1, 1]; zeros when omitted

    Returns:
        Vector of FEATURE_DIM entries, keyword flags first
    """
    features = np.zeros(FEATURE_DIM)
    features[:NUM_FLAGS] = flags_from_text(text)
    if knobs is not None:
        knobs = np.asarray(knobs, dtype=float)
        if knobs.shape != (NUM_KNOBS,):
            raise ValueError(f"Expected {NUM_KNOBS} knobs, got shape {knobs.shape}")
        features[NUM_FLAGS:] = np.clip(knobs, -1.0, 1.0)
    return features


def _matches_any(sentence: str, indices: List[int]) -> bool:
    lowered = sentence.lower()
    return any(LEXICON[i].pattern.search(lowered) for i in indices)


def splice_flags(text: str, target_flags: Sequence[float]) -> str:
    """
    Rewrite text so its lexicon flags equal target_flags.

    Sentences carrying an unwanted flag are dropped, then the canonical phrase of every
    wanted flag that is still missing is appended.
    """
    target = [int(round(v)) for v in target_flags]
    if len(target) != NUM_FLAGS:
        raise ValueError(f"Expected {NUM_FLAGS} flags, got {len(target)}")
    unwanted = [i for i, v in enumerate(target) if v == 0]

    kept_lines = []
    for line in (text or '').split('\n'):
        sentences = [s for s in _SENTENCE_SPLIT.split(line) if s.strip()]
        kept = [s for s in sentences if not _matches_any(s, unwanted)]
        if kept:
            kept_lines.append(' '.join(kept))
    result = '\n'.join(kept_lines)

    present = flags_from_text(result)
    additions = [LEXICON[i].phrase for i, v in enumerate(target) if v == 1 and present[i] == 0]
    if additions:
        result = f"{result} {' '.join(additions)}".strip() if result else ' '.join(additions)
    return result
