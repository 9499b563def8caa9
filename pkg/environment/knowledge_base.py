"""
Synthetic knowledge base
Multi-hop fact chains, broad-query distractor facts and a noise pool, generated deterministically
from a seed and serialized as JSONL
"""

import json
import logging
import zlib
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import StructuralError

logger = logging.getLogger(__name__)

RELATIONS = [
    'founder', 'capital', 'birthplace', 'director',
    'spouse', 'headquarters', 'author', 'mentor',
]

Fact = Tuple[str, str, str]


@dataclass
class Question:
    id: int
    text: str
    hop_entities: List[Tuple[str, str]]
    gold_answer: str

    @property
    def depth(self) -> int:
        return len(self.hop_entities)

    @property
    def head_entity(self) -> str:
        return self.hop_entities[0][0]

    def to_dict(self) -> Dict:
        return {
            'id': self.id,
            'text': self.text,
            'hop_entities': [[e, r] for e, r in self.hop_entities],
            'gold_answer': self.gold_answer,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Question':
        return cls(
            id=int(data['id']),
            text=data['text'],
            hop_entities=[(e, r) for e, r in data['hop_entities']],
            gold_answer=data['gold_answer'],
        )


class KnowledgeBase:
    """
    Set of (entity, relation, value) triples keyed by (entity, relation).

    Immutable once built; concurrent readers need no locking.
    """

    def __init__(self):
        self._facts: Dict[Tuple[str, str], str] = {}
        self._kinds: Dict[Tuple[str, str], str] = {}
        self._noise: List[Fact] = []

    def add_fact(self, entity: str, relation: str, value: str, kind: str = 'chain'):
        key = (entity, relation)
        if key in self._facts:
            raise StructuralError(f"Duplicate fact key {key}")
        self._facts[key] = value
        self._kinds[key] = kind
        if kind == 'noise':
            self._noise.append((entity, relation, value))

    def lookup(self, entity: str, relation: Optional[str]) -> Optional[str]:
        if relation is None:
            return None
        return self._facts.get((entity, relation))

    def distractor_for(self, entity: str, relation: str) -> Optional[Fact]:
        """The noise triple shown next to a hit on (entity, relation); a pure function of the key"""
        if not self._noise:
            return None
        index = zlib.crc32(f"{entity}|{relation}".encode('utf-8')) % len(self._noise)
        return self._noise[index]

    @property
    def facts(self) -> List[Fact]:
        return [(e, r, v) for (e, r), v in self._facts.items()]

    def __len__(self) -> int:
        return len(self._facts)

    def __contains__(self, key: Tuple[str, str]) -> bool:
        return key in self._facts

    def to_jsonl(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            for (entity, relation), value in self._facts.items():
                f.write(json.dumps({'entity': entity, 'relation': relation, 'value': value,
                                    'kind': self._kinds[(entity, relation)]}) + '\n')

    @classmethod
    def from_jsonl(cls, path: str) -> 'KnowledgeBase':
        kb = cls()
        with open(path, 'r', encoding='utf-8') as f:
            for line in f:
                if line.strip():
                    row = json.loads(line)
                    kb.add_fact(row['entity'], row['relation'], row['value'], row.get('kind', 'chain'))
        return kb


def question_text(hops: Sequence[Tuple[str, str]]) -> str:
    """'What is the r3 of the r2 of the r1 of entity_X?'"""
    relations = ' of the '.join(relation for _, relation in reversed(hops))
    return f"What is the {relations} of {hops[0][0]}?"


def depth_counts(total: int, mixture: Sequence[float]) -> List[int]:
    """Split total across depths 1..3; rounding remainder goes to depth 1"""
    deeper = [int(np.floor(total * share)) for share in mixture[1:]]
    return [total - sum(deeper)] + deeper


def generate_dataset(seed: int, counts: Sequence[int], noise_facts: int = 64,
                     start_id: int = 0) -> Tuple[KnowledgeBase, List[Question]]:
    """
    Build a knowledge base and its questions

    Args:
        seed: Generation seed
        counts: Number of questions at depth 1, 2 and 3
        noise_facts: Size of the pool that distractor triples are drawn from
        start_id: First question id

    Returns:
        (KnowledgeBase, questions in generation order)
    """
    if any(c < 0 for c in counts):
        raise StructuralError(f"Question counts must be >= 0, got {list(counts)}")
    rng = np.random.default_rng(seed)
    kb = KnowledgeBase()
    next_entity = [0]

    def new_entity() -> str:
        name = f"entity_{next_entity[0]:04d}"
        next_entity[0] += 1
        return name

    depths = np.concatenate([np.full(c, d + 1, dtype=int) for d, c in enumerate(counts)])
    depths = rng.permutation(depths)

    questions: List[Question] = []
    for offset, depth in enumerate(depths):
        relations = [RELATIONS[i] for i in rng.choice(len(RELATIONS), size=int(depth), replace=False)]
        entities = [new_entity() for _ in range(depth + 1)]
        hops = [(entities[i], relations[i]) for i in range(depth)]
        for i, (entity, relation) in enumerate(hops):
            kb.add_fact(entity, relation, entities[i + 1], 'chain')
        if depth >= 2:
            # A broad query pairs the head entity with the last relation and lands on a wrong value
            kb.add_fact(entities[0], relations[-1], new_entity(), 'broad')
        questions.append(Question(
            id=start_id + offset,
            text=question_text(hops),
            hop_entities=hops,
            gold_answer=entities[-1],
        ))

    for _ in range(noise_facts):
        relation = RELATIONS[int(rng.integers(len(RELATIONS)))]
        kb.add_fact(new_entity(), relation, new_entity(), 'noise')

    logger.debug(f"Generated {len(questions)} questions over {len(kb)} facts (seed={seed})")
    return kb, questions


def save_questions(questions: Sequence[Question], path: str):
    with open(path, 'w', encoding='utf-8') as f:
        for question in questions:
            f.write(json.dumps(question.to_dict()) + '\n')


def load_questions(path: str) -> List[Question]:
    questions = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if line.strip():
                questions.append(Question.from_dict(json.loads(line)))
    return questions


@dataclass
class Dataset:
    """Knowledge base with its training and evaluation splits"""
    kb: KnowledgeBase
    train: List[Question]
    eval: List[Question]

    def question_index(self) -> Dict[int, Question]:
        return {q.id: q for q in self.train + self.eval}


def build_dataset(seed: int, train_questions: int, eval_questions: int,
                  depth_mixture: Sequence[float], noise_facts: int = 64) -> Dataset:
    """
    Training and evaluation questions drawn from one knowledge base.

    Questions are generated in shuffled depth order, so the first train_questions form
    the training split and the rest the evaluation split.
    """
    total = train_questions + eval_questions
    kb, questions = generate_dataset(seed, depth_counts(total, depth_mixture), noise_facts)
    return Dataset(kb=kb, train=questions[:train_questions], eval=questions[train_questions:])
