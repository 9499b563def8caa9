"""
Featurized softmax policy
logit(a) = theta_a . [state_features, instruction_features, 1], stored as one flat vector,
with frozen reference and rollout-time copies and a binary checkpoint format
"""

import logging
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import log_softmax

from core.errors import StructuralError, NumericError
from environment.instruction_features import FEATURE_DIM, NUM_FLAGS
from environment.search_env import ActionSet, NEXT_SLOT_OFFSET, STATE_DIM

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b'CEVP'
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct('<4sIIII')   # magic, version, P, F, |A|

WHICH = ('current', 'old', 'ref')


@dataclass
class PolicyParams:
    """
    Parameters of the softmax policy.

    theta_ref is fixed at construction; theta_old is refreshed by the trainer at rollout time.
    """
    theta: np.ndarray
    theta_ref: np.ndarray
    theta_old: np.ndarray
    num_actions: int
    instruction_dim: int

    @classmethod
    def create(cls, num_actions: int, state_dim: int, instruction_dim: int,
               theta: Optional[np.ndarray] = None) -> 'PolicyParams':
        size = num_actions * (state_dim + instruction_dim + 1)
        if theta is None:
            theta = np.zeros(size)
        theta = np.array(theta, dtype=float).reshape(-1)
        if theta.size != size:
            raise StructuralError(f"Expected {size} parameters, got {theta.size}")
        if not np.all(np.isfinite(theta)):
            raise NumericError("Initial parameters must be finite")
        return cls(theta=theta.copy(), theta_ref=theta.copy(), theta_old=theta.copy(),
                   num_actions=num_actions, instruction_dim=instruction_dim)

    @property
    def size(self) -> int:
        return self.theta.size

    @property
    def input_dim(self) -> int:
        return self.theta.size // self.num_actions

    @property
    def state_dim(self) -> int:
        return self.input_dim - self.instruction_dim - 1

    def vector(self, which: str = 'current') -> np.ndarray:
        if which == 'current':
            return self.theta
        if which == 'old':
            return self.theta_old
        if which == 'ref':
            return self.theta_ref
        raise StructuralError(f"Unknown parameter copy '{which}', expected one of {WHICH}")

    def matrix(self, which: str = 'current') -> np.ndarray:
        return self.vector(which).reshape(self.num_actions, self.input_dim)

    def refresh_old(self):
        self.theta_old = self.theta.copy()

    def copy(self) -> 'PolicyParams':
        return PolicyParams(theta=self.theta.copy(), theta_ref=self.theta_ref.copy(),
                            theta_old=self.theta_old.copy(), num_actions=self.num_actions,
                            instruction_dim=self.instruction_dim)

    def with_theta(self, theta: np.ndarray) -> 'PolicyParams':
        """Copy sharing the reference and old vectors but with a new current vector"""
        return PolicyParams(theta=np.asarray(theta, dtype=float), theta_ref=self.theta_ref,
                            theta_old=self.theta_old, num_actions=self.num_actions,
                            instruction_dim=self.instruction_dim)

    def save(self, path: str):
        """Header {magic, version, P, F, |A|} then little-endian float64 theta and theta_ref"""
        with open(path, 'wb') as f:
            f.write(_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, self.size,
                                 self.instruction_dim, self.num_actions))
            f.write(self.theta.astype('<f8').tobytes())
            f.write(self.theta_ref.astype('<f8').tobytes())

    @classmethod
    def load(cls, path: str) -> 'PolicyParams':
        with open(path, 'rb') as f:
            header = f.read(_HEADER.size)
            if len(header) != _HEADER.size:
                raise StructuralError(f"Truncated policy checkpoint: {path}")
            magic, version, size, instruction_dim, num_actions = _HEADER.unpack(header)
            if magic != CHECKPOINT_MAGIC:
                raise StructuralError(f"Not a policy checkpoint: {path}")
            if version != CHECKPOINT_VERSION:
                raise StructuralError(f"Unsupported policy checkpoint version {version}")
            payload = f.read()
        if len(payload) != 2 * size * 8 or size % num_actions != 0:
            raise StructuralError(f"Policy checkpoint payload does not match its header: {path}")
        values = np.frombuffer(payload, dtype='<f8').astype(float)
        theta, theta_ref = values[:size].copy(), values[size:].copy()
        return cls(theta=theta, theta_ref=theta_ref, theta_old=theta.copy(),
                   num_actions=num_actions, instruction_dim=instruction_dim)


def policy_input(params: PolicyParams, state_features, instruction_features) -> np.ndarray:
    state = np.asarray(state_features, dtype=float)
    instruction = np.asarray(instruction_features, dtype=float)
    if instruction.shape != (params.instruction_dim,) or state.shape != (params.state_dim,):
        raise StructuralError(
            f"Feature dimensions ({state.size}, {instruction.size}) do not match the policy "
            f"layout ({params.state_dim}, {params.instruction_dim})")
    return np.concatenate([state, instruction, [1.0]])


def action_logits(params: PolicyParams, which: str, state_features, instruction_features) -> np.ndarray:
    x = policy_input(params, state_features, instruction_features)
    return params.matrix(which) @ x


def action_log_probabilities(params: PolicyParams, which: str, state_features,
                             instruction_features, action_mask=None) -> np.ndarray:
    """Log-softmax over the unmasked ids; masked ids get -inf"""
    logits = action_logits(params, which, state_features, instruction_features)
    if action_mask is None:
        return log_softmax(logits)
    mask = np.asarray(action_mask, dtype=bool)
    if mask.shape != logits.shape or not mask.any():
        raise StructuralError(f"Action mask of shape {mask.shape} leaves no action out of {logits.size}")
    return log_softmax(np.where(mask, logits, -np.inf))


def action_probabilities(params: PolicyParams, which: str, state_features,
                         instruction_features, action_mask=None) -> np.ndarray:
    return np.exp(action_log_probabilities(params, which, state_features, instruction_features,
                                           action_mask))


def masked_log_ratio(logp: np.ndarray, logq: np.ndarray) -> np.ndarray:
    """logp - logq on the ids logp allows, 0 on masked ids"""
    valid = np.isfinite(logp)
    ratio = np.zeros_like(logp)
    ratio[valid] = logp[valid] - logq[valid]
    return ratio


def prior_parameters(actions: ActionSet = ActionSet()) -> PolicyParams:
    """
    Pretrained starting point for the search environment layout.

    Encodes a base model that already follows its system prompt: every instruction flag
    shifts action preferences the way its wording asks for, so better instructions give
    better behavior before any training. Without guidance it searches the whole question
    (relation slot 0 from the head entity) and answers with the first value it finds.
    The reference policy is this prior.
    """
    if actions.memory_slots < 2:
        raise StructuralError("The prior needs at least two memory positions")
    turn, resolved, last_hit = 0, 1, 2
    flags = STATE_DIM
    knobs = STATE_DIM + NUM_FLAGS
    bias = STATE_DIM + FEATURE_DIM

    w = np.zeros((actions.size, STATE_DIM + FEATURE_DIM + 1))
    searches = [actions.search(k) for k in range(actions.max_depth)]
    deeper = searches[1:]
    broad = actions.search(0)
    seen, hit = actions.answer(0), actions.answer(1)
    older = [actions.answer(m) for m in range(2, actions.memory_slots)]
    guess = actions.guess

    w[broad, bias] = 3.0
    for slot, action in enumerate(searches):
        w[action, NEXT_SLOT_OFFSET + slot] = 2.0
    w[searches, resolved] = -2.0
    w[seen, bias] = -1.0
    w[older, bias] = -3.0
    w[guess, bias] = -3.0
    w[[seen, hit], last_hit] += [3.0, 4.5]
    w[hit, resolved] += 9.0
    w[hit, turn] += 3.0
    w[guess, turn] = 2.0

    # step-by-step, individually, no whole-question search, analyze results,
    # verify, answer format, plan, search freely
    w[hit, flags + 0] -= 3.0
    w[broad, flags + 1] -= 1.5
    w[hit, flags + 1] -= 1.0
    w[broad, flags + 2] -= 1.5
    w[hit, flags + 2] -= 1.0
    w[seen, flags + 3] -= 3.0
    w[hit, flags + 3] -= 2.5
    w[guess, flags + 3] -= 0.5
    w[hit, flags + 4] -= 3.5
    w[seen, flags + 4] -= 2.0
    w[guess, flags + 4] -= 1.0
    w[guess, flags + 5] -= 1.0
    w[seen, flags + 5] -= 0.5
    w[hit, flags + 6] -= 3.0
    w[broad, flags + 6] -= 0.5
    w[broad, flags + 7] += 0.5
    w[deeper, flags + 7] += 0.3

    w[deeper, knobs + 0] = 0.5
    w[broad, knobs + 1] = -0.5
    w[hit, knobs + 2] = 0.5
    w[guess, knobs + 3] = -0.5

    return PolicyParams.create(actions.size, STATE_DIM, FEATURE_DIM, w.reshape(-1))
