"""
Multi-hop search environment
Turn-based fact lookup MDP with a search tool, exact-match reward and fixed-size state features
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from core.errors import StructuralError
from tools.search_tool import SearchTool
from .knowledge_base import KnowledgeBase, Question
from .trajectory import DecisionPoint, Trajectory


MAX_DEPTH = 3
MEMORY_SLOTS = 4

# turn, resolved fraction, last hit, memory size, depth one-hot, next-slot one-hot
STATE_DIM = 4 + 2 * MAX_DEPTH
DEPTH_OFFSET = 4
NEXT_SLOT_OFFSET = DEPTH_OFFSET + MAX_DEPTH

# Answers that can never equal a generated gold entity
GUESS_ANSWERS = ['unknown', 'none', 'yes', 'no']

SEARCH = 'search'
ANSWER = 'answer'
GUESS = 'guess'


@dataclass(frozen=True)
class ActionSet:
    """
    Enumerated action ids with a layout that does not depend on the question.

    Ids run SEARCH(slot) for slot < max_depth, then ANSWER(position) for
    position < memory_slots, then ANSWER(guess). Relation slots are numbered in
    question-text order, so slot 0 is the final relation; memory positions count
    back from the most recent value. Ids a state cannot use are masked.
    """
    max_depth: int = MAX_DEPTH
    memory_slots: int = MEMORY_SLOTS

    def __post_init__(self):
        if self.max_depth < 1 or self.memory_slots < 1:
            raise StructuralError(
                f"Action set needs max_depth >= 1 and memory_slots >= 1, "
                f"got {self.max_depth} and {self.memory_slots}")

    @property
    def size(self) -> int:
        return self.max_depth + self.memory_slots + 1

    def search(self, slot: int) -> int:
        if not 0 <= slot < self.max_depth:
            raise StructuralError(f"Relation slot {slot} outside [0, {self.max_depth})")
        return slot

    def answer(self, position: int) -> int:
        if not 0 <= position < self.memory_slots:
            raise StructuralError(f"Memory position {position} outside [0, {self.memory_slots})")
        return self.max_depth + position

    @property
    def guess(self) -> int:
        return self.size - 1

    def decode(self, action: int) -> Tuple[str, int]:
        """(kind, index) of an action id"""
        action = int(action)
        if not 0 <= action < self.size:
            raise StructuralError(f"Unknown action id {action}")
        if action < self.max_depth:
            return SEARCH, action
        if action < self.guess:
            return ANSWER, action - self.max_depth
        return GUESS, 0

    def is_search(self, action: int) -> bool:
        return self.decode(action)[0] == SEARCH

    def name(self, action: int) -> str:
        kind, index = self.decode(action)
        if kind == SEARCH:
            return f"SEARCH({index})"
        if kind == ANSWER:
            return f"ANSWER({index})"
        return 'ANSWER(guess)'


NUM_ACTIONS = ActionSet().size


def slot_hop(question: Question, slot: int) -> int:
    """Chain hop index of a question-text relation slot"""
    return question.depth - 1 - slot


@dataclass
class Episode:
    """Trajectory in progress plus the environment state it was built from"""
    question: Question
    instruction_features: np.ndarray
    trajectory: Trajectory
    actions: ActionSet = field(default_factory=ActionSet)
    resolved: int = 0
    memory: List[str] = field(default_factory=list)
    last_hit: bool = False
    latest_hit_value: Optional[str] = None
    done: bool = False

    @property
    def frontier(self) -> str:
        """Entity the next hop starts from; the gold answer once the chain is resolved"""
        if self.resolved < self.question.depth:
            return self.question.hop_entities[self.resolved][0]
        return self.question.gold_answer

    @property
    def next_slot(self) -> Optional[int]:
        """Question-text slot of the first unresolved hop"""
        if self.resolved >= self.question.depth:
            return None
        return slot_hop(self.question, self.resolved)

    def memory_position(self, value: Optional[str]) -> Optional[int]:
        """Position of the most recent occurrence of value, counted back from the newest"""
        for position, seen in enumerate(reversed(self.memory)):
            if seen == value:
                return position
        return None


def normalize_answer(text: Optional[str]) -> str:
    return ' '.join((text or '').lower().split())


def exact_match_reward(trajectory: Trajectory, question: Question) -> float:
    """1.0 iff the final answer equals the gold answer after whitespace and case normalization"""
    if trajectory.final_answer is None:
        return 0.0
    return 1.0 if normalize_answer(trajectory.final_answer) == normalize_answer(question.gold_answer) else 0.0


class SearchEnvironment:
    """
    Transitions are pure functions of (episode state, action, knowledge base); the
    environment itself is immutable and can be shared by concurrent rollouts.
    """

    def __init__(self, kb: KnowledgeBase, max_turns: int = 4, memory_slots: int = MEMORY_SLOTS):
        if max_turns < 1:
            raise StructuralError(f"max_turns must be >= 1, got {max_turns}")
        self.kb = kb
        self.max_turns = max_turns
        self.actions = ActionSet(MAX_DEPTH, memory_slots)
        self.tool = SearchTool(kb)

    @property
    def num_actions(self) -> int:
        return self.actions.size

    def reset(self, question: Question, instruction_id: int,
              instruction_features: np.ndarray) -> Episode:
        if question.depth > MAX_DEPTH:
            raise StructuralError(
                f"Question {question.id} has depth {question.depth}, more than {MAX_DEPTH} slots")
        return Episode(
            question=question,
            instruction_features=np.asarray(instruction_features, dtype=float),
            trajectory=Trajectory(instruction_id=instruction_id, question_id=question.id),
            actions=self.actions,
        )

    def state_features(self, episode: Episode) -> np.ndarray:
        depth = episode.question.depth
        features = np.zeros(STATE_DIM)
        features[0] = episode.trajectory.turns_used / self.max_turns
        features[1] = episode.resolved / depth
        features[2] = 1.0 if episode.last_hit else 0.0
        features[3] = min(len(episode.memory) / (2 * self.max_turns), 1.0)
        features[DEPTH_OFFSET + depth - 1] = 1.0
        if episode.next_slot is not None:
            features[NEXT_SLOT_OFFSET + episode.next_slot] = 1.0
        return features

    def action_mask(self, episode: Episode) -> np.ndarray:
        """True for the ids usable in the current state; the guess is always usable"""
        mask = np.zeros(self.actions.size, dtype=bool)
        mask[:episode.question.depth] = True
        filled = min(len(episode.memory), self.actions.memory_slots)
        mask[self.actions.max_depth:self.actions.max_depth + filled] = True
        mask[self.actions.guess] = True
        return mask

    def _search_key(self, episode: Episode, slot: int) -> Tuple[str, str]:
        question = episode.question
        return episode.frontier, question.hop_entities[slot_hop(question, slot)][1]

    def _answer_value(self, episode: Episode, kind: str, index: int) -> str:
        if kind == ANSWER:
            return episode.memory[-1 - index]
        return GUESS_ANSWERS[episode.trajectory.turns_used % len(GUESS_ANSWERS)]

    def step(self, episode: Episode, action: int) -> Optional[str]:
        """
        Apply one agent action

        Args:
            episode: Trajectory in progress
            action: Action id

        Returns:
            Observation text for a search, None once the episode terminated on an answer

        Raises:
            StructuralError: The episode is already terminal or the action is unknown or
                masked in the current state
        """
        if episode.done:
            raise StructuralError(f"Episode for question {episode.question.id} is already terminal")
        kind, index = self.actions.decode(action)
        mask = self.action_mask(episode)
        if not mask[int(action)]:
            raise StructuralError(
                f"Action {self.actions.name(action)} is not available for question "
                f"{episode.question.id} at turn {episode.trajectory.turns_used}")

        trajectory = episode.trajectory
        state = self.state_features(episode)

        if kind != SEARCH:
            answer = self._answer_value(episode, kind, index)
            trajectory.items.append(DecisionPoint(
                state, episode.instruction_features, int(action), True,
                f"<answer> {answer} </answer>", mask))
            trajectory.turns_used += 1
            self._terminate(episode, answer)
            return None

        entity, relation = self._search_key(episode, index)
        trajectory.items.append(DecisionPoint(
            state, episode.instruction_features, int(action), True,
            f"<search> {entity} {relation} </search>", mask))
        trajectory.turns_used += 1

        result = self.tool.execute(entity=entity, relation=relation)['result']
        if result['hit']:
            if episode.resolved < episode.question.depth and \
                    (entity, relation) == episode.question.hop_entities[episode.resolved]:
                episode.resolved += 1
            episode.last_hit = True
            episode.latest_hit_value = result['value']
            episode.memory.append(result['value'])
            shown = [f"({entity}, {relation}) -> {result['value']}"]
            if result['distractor'] is not None:
                d_entity, d_relation, d_value = result['distractor']
                episode.memory.append(d_value)
                shown.append(f"({d_entity}, {d_relation}) -> {d_value}")
            observation = f"<information> {' ; '.join(shown)} </information>"
        else:
            episode.last_hit = False
            observation = '<information> no result </information>'

        trajectory.items.append(DecisionPoint(
            self.state_features(episode), episode.instruction_features, None, False, observation))

        if trajectory.turns_used >= self.max_turns:
            self._terminate(episode, None)
        return observation

    def _terminate(self, episode: Episode, answer: Optional[str]):
        episode.done = True
        episode.trajectory.final_answer = answer
        episode.trajectory.reward = exact_match_reward(episode.trajectory, episode.question)
