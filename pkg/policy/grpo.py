"""
Group-relative policy gradient
Group-normalized advantages, clipped importance-weighted surrogate with observation masking,
closed-form KL to the reference policy, analytic gradients and the descent step
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from core.errors import StructuralError, NumericError
from environment.trajectory import DecisionPoint, Trajectory
from .softmax_policy import PolicyParams, policy_input, action_log_probabilities, masked_log_ratio

logger = logging.getLogger(__name__)

RATIO_FLOOR = 1e-30
STD_EPS = 1e-8


@dataclass
class GroupRollout:
    """G trajectories for one (question, instruction) pair"""
    trajectories: List[Trajectory]
    rewards: List[float]
    advantages: List[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.trajectories) != len(self.rewards):
            raise StructuralError(
                f"Group has {len(self.trajectories)} trajectories but {len(self.rewards)} rewards")

    @property
    def size(self) -> int:
        return len(self.trajectories)

    @classmethod
    def from_trajectories(cls, trajectories: List[Trajectory]) -> 'GroupRollout':
        group = cls(trajectories=list(trajectories), rewards=[t.reward for t in trajectories])
        group.advantages = compute_advantages(group.rewards)
        return group


def compute_advantages(rewards: Sequence[float]) -> List[float]:
    """(r - mean) / population std; an all-zero vector when the std is below 1e-8"""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size < 2:
        raise StructuralError(f"Advantages need a group of at least 2, got {rewards.size}")
    std = rewards.std()
    if std < STD_EPS:
        return [0.0] * rewards.size
    return list((rewards - rewards.mean()) / std)


def _require_agent(point: DecisionPoint):
    if not point.is_agent:
        raise StructuralError("Observation points have no action distribution")
    if point.action_mask is not None and not point.action_mask[point.action_taken]:
        raise StructuralError(f"Recorded action {point.action_taken} is masked at its own decision point")


def _log_probabilities(point: DecisionPoint, params: PolicyParams, which: str) -> np.ndarray:
    return action_log_probabilities(params, which, point.state_features, point.instruction_features,
                                    point.action_mask)


def importance_ratio_details(point: DecisionPoint, params: PolicyParams) -> Tuple[float, bool]:
    """(ratio, clamped) where clamped flags a denominator below the 1e-30 floor"""
    _require_agent(point)
    a = point.action_taken
    logp = _log_probabilities(point, params, 'current')
    logp_old = _log_probabilities(point, params, 'old')
    old = np.exp(logp_old[a])
    if old < RATIO_FLOOR:
        logger.warning(f"Old-policy probability {old:.3e} of action {a} clamped to {RATIO_FLOOR}")
        return float(np.exp(logp[a]) / RATIO_FLOOR), True
    return float(np.exp(logp[a]) / old), False


def importance_ratio(point: DecisionPoint, params: PolicyParams) -> float:
    return importance_ratio_details(point, params)[0]


def kl_penalty(point: DecisionPoint, params: PolicyParams) -> float:
    """Exact KL(pi_theta || pi_ref) summed over the ids the point allows"""
    _require_agent(point)
    logp = _log_probabilities(point, params, 'current')
    logq = _log_probabilities(point, params, 'ref')
    return float(np.sum(np.exp(logp) * masked_log_ratio(logp, logq)))


def _point_terms(point: DecisionPoint, advantage: float, params: PolicyParams,
                 clip_eps: float, kl_coef: float) -> Tuple[float, np.ndarray]:
    """Objective contribution of one agent point and its gradient w.r.t. the flat theta"""
    _require_agent(point)
    x = policy_input(params, point.state_features, point.instruction_features)
    a = point.action_taken
    logp = _log_probabilities(point, params, 'current')
    logp_old = _log_probabilities(point, params, 'old')
    logq = _log_probabilities(point, params, 'ref')
    probs = np.exp(logp)

    old = np.exp(logp_old[a])
    if old < RATIO_FLOOR:
        logger.warning(f"Old-policy probability {old:.3e} of action {a} clamped to {RATIO_FLOOR}")
        old = RATIO_FLOOR
    ratio = np.exp(logp[a]) / old

    unclipped = ratio * advantage
    clipped = float(np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)) * advantage
    if unclipped <= clipped:
        surrogate, d_ratio = unclipped, advantage
    else:
        # Clipped branch strictly smaller: only possible outside the trust region, where it is flat
        surrogate, d_ratio = clipped, 0.0

    log_ratio_ref = masked_log_ratio(logp, logq)
    kl = float(np.sum(probs * log_ratio_ref))

    one_hot = np.zeros_like(probs)
    one_hot[a] = 1.0
    # d ratio / d logits = ratio * (e_a - pi);  d KL / d logits = pi * (l - KL); masked ids have pi = 0
    d_logits = d_ratio * ratio * (one_hot - probs) - kl_coef * probs * (log_ratio_ref - kl)
    return surrogate - kl_coef * kl, np.outer(d_logits, x).reshape(-1)


def surrogate_loss(group: GroupRollout, params: PolicyParams, clip_eps: float,
                   kl_coef: float) -> Tuple[float, np.ndarray]:
    """
    Negated clipped surrogate objective of one group and its analytic gradient.

    Each trajectory sums its agent-point terms and divides by its agent-point count;
    observation points are skipped entirely; trajectory terms are averaged over the group.

    Returns:
        (loss, gradient of the loss w.r.t. the flat theta)
    """
    if len(group.advantages) != group.size:
        raise StructuralError("Advantages must be computed before the surrogate loss")
    objective = 0.0
    gradient = np.zeros(params.size)
    # Fixed reduction order keeps the sum bit-reproducible
    for trajectory, advantage in zip(group.trajectories, group.advantages):
        points = trajectory.agent_points
        if not points:
            raise StructuralError(
                f"Trajectory for question {trajectory.question_id} has no agent decision point")
        traj_objective = 0.0
        traj_gradient = np.zeros(params.size)
        for point in points:
            value, grad = _point_terms(point, advantage, params, clip_eps, kl_coef)
            traj_objective += value
            traj_gradient += grad
        objective += traj_objective / len(points)
        gradient += traj_gradient / len(points)
    objective /= group.size
    gradient /= group.size
    return -objective, -gradient


def batch_loss(groups: Sequence[GroupRollout], params: PolicyParams, clip_eps: float,
               kl_coef: float) -> Tuple[float, np.ndarray]:
    """Mean of the group losses and gradients"""
    if not groups:
        raise StructuralError("Batch holds no group")
    total_loss = 0.0
    total_gradient = np.zeros(params.size)
    for group in groups:
        loss, gradient = surrogate_loss(group, params, clip_eps, kl_coef)
        total_loss += loss
        total_gradient += gradient
    return total_loss / len(groups), total_gradient / len(groups)


def apply_update(params: PolicyParams, gradient: np.ndarray, learning_rate: float) -> PolicyParams:
    """
    Plain gradient descent step; theta_old is left alone

    Returns:
        New PolicyParams; the input is not modified

    Raises:
        NumericError: The gradient or the updated parameters are not finite
    """
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != params.theta.shape:
        raise StructuralError(f"Gradient shape {gradient.shape} does not match {params.theta.shape}")
    if not np.all(np.isfinite(gradient)):
        bad = int(np.sum(~np.isfinite(gradient)))
        raise NumericError(f"Gradient has {bad} non-finite entries; step aborted")
    theta = params.theta - learning_rate * gradient
    if not np.all(np.isfinite(theta)):
        raise NumericError("Update produced non-finite parameters; step aborted")
    updated = params.copy()
    updated.theta = theta
    return updated
