"""
Mutation proposer
Offline candidate generator: toggles one keyword flag and jitters the continuous knobs
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from core.errors import StructuralError
from environment.instruction_features import (
    NUM_FLAGS, NUM_KNOBS, instruction_features_from_text, splice_flags
)

KNOB_JITTER = 0.2


@dataclass
class DraftCandidate:
    """A proposed instruction not yet admitted to the population"""
    text: str
    features: np.ndarray
    parent_id: int
    origin: str
    proxy_score: Optional[float] = None


def mutation_propose(parent, rng: np.random.Generator, count: int) -> List[DraftCandidate]:
    """
    count mutation variants of parent

    Each variant flips one uniformly chosen keyword flag (the lexicon phrase is spliced in
    or out of the text) and moves every knob by U(-0.2, 0.2), clipped to [-1, 1].
    """
    if count < 1:
        raise StructuralError(f"Mutation count must be >= 1, got {count}")
    parent_flags = np.asarray(parent.features[:NUM_FLAGS], dtype=float)
    parent_knobs = np.asarray(parent.features[NUM_FLAGS:], dtype=float)

    drafts = []
    for _ in range(count):
        flags = parent_flags.copy()
        index = int(rng.integers(NUM_FLAGS))
        flags[index] = 1.0 - flags[index]
        knobs = np.clip(parent_knobs + rng.uniform(-KNOB_JITTER, KNOB_JITTER, NUM_KNOBS), -1.0, 1.0)
        text = splice_flags(parent.text, flags)
        drafts.append(DraftCandidate(
            text=text,
            features=instruction_features_from_text(text, knobs),
            parent_id=parent.id,
            origin='mutation',
        ))
    return drafts


def drafts_from_texts(parent, texts: List[str], origin: str) -> List[DraftCandidate]:
    """Generator texts as drafts: flags read from the text, knobs inherited from the parent"""
    knobs = np.asarray(parent.features[NUM_FLAGS:], dtype=float)
    return [DraftCandidate(text=text, features=instruction_features_from_text(text, knobs),
                           parent_id=parent.id, origin=origin)
            for text in texts]
