"""
Trajectory records
Interleaved agent actions and tool observations with per-item provenance
"""

from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional

import numpy as np


@dataclass
class DecisionPoint:
    """
    One item of a trajectory.

    Agent items carry the action taken in the recorded state and the mask of ids that
    state allowed (None means every id); observation items (is_agent False) carry tool
    output and never contribute likelihood.
    """
    state_features: np.ndarray
    instruction_features: np.ndarray
    action_taken: Optional[int]
    is_agent: bool = True
    content: str = ''
    action_mask: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'state_features': [float(v) for v in self.state_features],
            'instruction_features': [float(v) for v in self.instruction_features],
            'action_taken': self.action_taken,
            'is_agent': self.is_agent,
            'content': self.content,
            'action_mask': None if self.action_mask is None else [bool(v) for v in self.action_mask],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DecisionPoint':
        return cls(
            state_features=np.asarray(data['state_features'], dtype=float),
            instruction_features=np.asarray(data['instruction_features'], dtype=float),
            action_taken=data['action_taken'],
            is_agent=data['is_agent'],
            content=data.get('content', ''),
            action_mask=None if data.get('action_mask') is None else np.asarray(data['action_mask'], dtype=bool),
        )


@dataclass
class Trajectory:
    instruction_id: int
    question_id: int
    items: List[DecisionPoint] = field(default_factory=list)
    final_answer: Optional[str] = None
    turns_used: int = 0
    reward: float = 0.0

    @property
    def agent_points(self) -> List[DecisionPoint]:
        return [item for item in self.items if item.is_agent]

    @property
    def tool_calls(self) -> int:
        """Agent actions that produced an observation"""
        count = 0
        for current, following in zip(self.items, self.items[1:]):
            if current.is_agent and not following.is_agent:
                count += 1
        return count

    def render(self) -> str:
        """Plain-text transcript used as the 'Response:' body of reflection examples"""
        return '\n'.join(item.content for item in self.items)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'instruction_id': self.instruction_id,
            'question_id': self.question_id,
            'items': [item.to_dict() for item in self.items],
            'final_answer': self.final_answer,
            'turns_used': self.turns_used,
            'reward': self.reward,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Trajectory':
        return cls(
            instruction_id=data['instruction_id'],
            question_id=data['question_id'],
            items=[DecisionPoint.from_dict(item) for item in data['items']],
            final_answer=data.get('final_answer'),
            turns_used=data['turns_used'],
            reward=data['reward'],
        )
