"""
Candidate verifier
Scores drafts against their parent on a validation set with the current policy and admits
those that keep up
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from agents.policy_agent import PolicyAgent
from core.errors import StructuralError
from core.rng_streams import VERIFY_TAG, derive_seed
from environment.knowledge_base import Question
from policy.softmax_policy import PolicyParams
from workflows.rollout import RolloutRequest, RolloutWorker
from .mutation import DraftCandidate

logger = logging.getLogger(__name__)


@dataclass
class VerificationResult:
    parent_score: float
    scores: List[float]
    admitted: List[DraftCandidate] = field(default_factory=list)
    rejected: List[DraftCandidate] = field(default_factory=list)
    rollouts: int = 0


def verification_seed(seed: int, step: int, question_id: int, slot: int,
                      common_random_numbers: bool) -> int:
    """Per-rollout seed; slot 0 is the parent, drafts follow from 1"""
    if common_random_numbers:
        return derive_seed(seed, VERIFY_TAG, step, question_id)
    return derive_seed(seed, VERIFY_TAG, step, slot, question_id)


def proxy_score(worker: RolloutWorker, agent: PolicyAgent, instruction_id: int,
                features: np.ndarray, questions: Sequence[Question], seed: int, step: int,
                slot: int, common_random_numbers: bool) -> Tuple[float, int]:
    """(mean exact-match reward, rollouts run), one rollout per question; 0.0 on an empty set"""
    if not questions:
        return 0.0, 0
    requests = [
        RolloutRequest(q, instruction_id, features,
                       verification_seed(seed, step, q.id, slot, common_random_numbers))
        for q in questions
    ]
    trajectories = worker.run_many(agent, requests)
    return float(np.mean([t.reward for t in trajectories])), len(trajectories)


def verify_candidates(drafts: List[DraftCandidate], parent, questions: Sequence[Question],
                      params: PolicyParams, worker: RolloutWorker, admit_count: int,
                      acceptance_ratio: float, seed: int, step: int,
                      common_random_numbers: bool = True) -> VerificationResult:
    """
    Rank drafts by proxy score and admit up to admit_count of them

    The parent is rescored on the same questions in the same pass. A draft passes when its
    score is at least acceptance_ratio times the parent's; ties in score keep proposal order.

    Args:
        drafts: Candidates from one generate round
        parent: Population member the drafts came from
        questions: Validation set
        params: Policy parameters; rollouts sample from the current copy
        worker: Rollout worker
        admit_count: Most drafts to admit
        acceptance_ratio: Threshold relative to the parent's score
        seed: Run seed
        step: Training step of the evolution event
        common_random_numbers: Share rollout seeds between parent and drafts

    Returns:
        VerificationResult with admitted drafts in rank order
    """
    if not drafts:
        raise StructuralError("Nothing to verify")
    agent = PolicyAgent(params, which='current')

    parent_score, rollouts = proxy_score(worker, agent, parent.id, parent.features, questions,
                                         seed, step, 0, common_random_numbers)
    scores = []
    for slot, draft in enumerate(drafts, 1):
        draft.proxy_score, ran = proxy_score(worker, agent, -slot, draft.features, questions,
                                             seed, step, slot, common_random_numbers)
        rollouts += ran
        scores.append(draft.proxy_score)

    threshold = acceptance_ratio * parent_score
    order = sorted(range(len(drafts)), key=lambda i: (-scores[i], i))
    passing = [drafts[i] for i in order if scores[i] >= threshold]
    admitted = passing[:max(admit_count, 0)]
    rejected = [d for d in drafts if not any(d is a for a in admitted)]

    for draft in rejected:
        logger.info(f"Step {step}: rejected draft from parent {parent.id} "
                    f"(score {draft.proxy_score:.3f} vs threshold {threshold:.3f})")
    logger.info(f"Step {step}: parent {parent.id} scored {parent_score:.3f}, "
                f"admitted {len(admitted)}/{len(drafts)} draft(s)")

    return VerificationResult(
        parent_score=parent_score,
        scores=scores,
        admitted=admitted,
        rejected=rejected,
        rollouts=rollouts,
    )
