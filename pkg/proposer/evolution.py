"""
Instruction evolution
Generate-verify-admit rounds that refill the population from its best members
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core.errors import CandidateParseError, GeneratorUnavailableError, StructuralError
from core.rng_streams import RngStreams
from core.run_config import RunConfig
from environment.instruction_features import instruction_features_from_text
from environment.knowledge_base import Question
from llmabstraction.llmcore.llm_client import LLMClient
from policy.softmax_policy import PolicyParams
from population.instruction_population import InstructionCandidate, Population
from replay.replay_buffer import ReplayBuffer
from workflows.rollout import RolloutWorker
from .candidate_parser import parse_candidates
from .mutation import DraftCandidate, drafts_from_texts, mutation_propose
from .prompt_builder import PromptBuilder, PromptContext
from .verifier import verify_candidates

logger = logging.getLogger(__name__)


@dataclass
class ProposalBatch:
    """One generator exchange and what was parsed from it"""
    parent_id: int
    kind: str
    step: int
    prompt_text: str
    raw_response: str
    candidates: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'parent_id': self.parent_id,
            'kind': self.kind,
            'step': self.step,
            'prompt_text': self.prompt_text,
            'raw_response': self.raw_response,
            'candidates': list(self.candidates),
        }


@dataclass
class RoundRecord:
    """What one generate-verify round asked for and spent"""
    kind: str
    parent_id: int
    requested: bool = False
    candidates: int = 0
    validation_size: int = 0
    rollouts: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'parent_id': self.parent_id,
            'requested': self.requested,
            'candidates': self.candidates,
            'validation_size': self.validation_size,
            'rollouts': self.rollouts,
        }


@dataclass
class EvolutionReport:
    """
    Totals for one evolution event

    generator_calls counts only requests that reached the generator client; mutation rounds
    and rounds that fell back to mutation before a request cost nothing.
    """
    step: int
    generator_calls: int = 0
    rounds: int = 0
    verification_rollouts: int = 0
    admitted: int = 0
    mutation_fills: int = 0
    fallbacks: int = 0
    parse_failures: int = 0
    batches: List[ProposalBatch] = field(default_factory=list)
    round_log: List[RoundRecord] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'step': self.step,
            'generator_calls': self.generator_calls,
            'rounds': self.rounds,
            'verification_rollouts': self.verification_rollouts,
            'admitted': self.admitted,
            'mutation_fills': self.mutation_fills,
            'fallbacks': self.fallbacks,
            'parse_failures': self.parse_failures,
            'round_log': [r.to_dict() for r in self.round_log],
        }


class TextProposer:
    """Sends template prompts to the generator client and parses the candidates it returns"""

    def __init__(self, client: LLMClient, prompt_builder: PromptBuilder, candidates_per_call: int = 6):
        self.client = client
        self.prompt_builder = prompt_builder
        self.candidates_per_call = candidates_per_call

    def propose(self, kind: str, parent: InstructionCandidate, context: PromptContext,
                step: int) -> ProposalBatch:
        """
        Raises:
            GeneratorUnavailableError: The client reported a failed exchange
            CandidateParseError: The response held no candidate
        """
        prompt = self.prompt_builder.build_prompt(kind, parent.text, context)
        response = self.client.generate(prompt)
        if not response.ok:
            raise GeneratorUnavailableError(response.error)
        batch = ProposalBatch(parent_id=parent.id, kind=kind, step=step,
                              prompt_text=prompt, raw_response=response.content)
        batch.candidates = parse_candidates(response.content)
        return batch


def initial_population(seed_text: str, config: RunConfig, rng: np.random.Generator,
                       pinned: bool = False) -> Population:
    """
    The seed instruction plus population_size - 1 mutation variants of it

    Static runs (and pinned=True) keep the seed instruction alone.
    """
    population = Population(config.population_size, config.num_parents,
                            config.sample_temperature, config.weight_window)
    seed = population.add_candidate(seed_text, instruction_features_from_text(seed_text))
    if pinned or config.static_instruction:
        return population
    for draft in mutation_propose(seed, rng, config.population_size - 1):
        population.add_candidate(draft.text, draft.features, birth_step=0, parent_id=seed.id)
    logger.info(f"Initial population of {len(population)} instruction(s)")
    return population


def _round_drafts(kind: str, parent: InstructionCandidate, population: Population,
                  buffer: ReplayBuffer, questions_by_id: Dict[int, Question],
                  proposer: Optional[TextProposer], config: RunConfig, step: int,
                  rng: np.random.Generator, report: EvolutionReport) -> Optional[List[DraftCandidate]]:
    """Drafts for one round, or None when the round produced nothing usable"""
    count = config.candidates_per_call
    if kind == 'mutation' or proposer is None:
        return mutation_propose(parent, rng, count)

    context = PromptContext(num_candidates=count)
    if kind == 'reflection':
        failures = buffer.sample_failures(config.failures_per_reflection, step, rng)
        if not failures:
            logger.warning(f"Step {step}: no failure trajectories for reflection, "
                           f"mutating parent {parent.id} instead")
            report.fallbacks += 1
            return mutation_propose(parent, rng, count)
        context.failures = [(r.trajectory.render(), questions_by_id[r.question_id].gold_answer)
                            for r in failures]
    elif kind == 'history':
        context.history = [(c.text, c.weight) for c in population.ranked()]

    report.generator_calls += 1
    report.round_log[-1].requested = True
    try:
        batch = proposer.propose(kind, parent, context, step)
    except GeneratorUnavailableError as exc:
        logger.error(f"Step {step}: GENERATOR UNAVAILABLE ({exc}); "
                     f"falling back to mutation for this round")
        report.fallbacks += 1
        return mutation_propose(parent, rng, count)
    except CandidateParseError as exc:
        logger.warning(f"Step {step}: {exc}; round discarded")
        report.parse_failures += 1
        return None
    report.batches.append(batch)
    return drafts_from_texts(parent, batch.candidates, kind)


def evolve_population(population: Population, buffer: ReplayBuffer, params: PolicyParams,
                      worker: RolloutWorker, questions_by_id: Dict[int, Question],
                      config: RunConfig, step: int, rngs: RngStreams,
                      proposer: Optional[TextProposer] = None):
    """
    Replace every non-parent member with verified candidates

    Rounds continue until the population would be full again or max_retrials rounds have
    run; any shortfall is filled with unverified mutation variants. The input population is
    left untouched.

    Returns:
        (new Population, EvolutionReport)
    """
    evolved = Population.from_dict(population.to_dict())
    parents = evolved.top(config.num_parents)
    if not parents:
        raise StructuralError("Cannot evolve an empty population")
    needed = config.population_size - len(parents)
    report = EvolutionReport(step=step)

    validation: Sequence[Question] = []
    if config.enable_verify and len(buffer):
        validation = [questions_by_id[qid] for qid in
                      buffer.validation_set(config.validation_size, rngs.verification)]

    admitted: List[DraftCandidate] = []
    while len(admitted) < needed and report.rounds < config.max_retrials:
        report.rounds += 1
        parent = parents[int(rngs.proposer.integers(len(parents)))]
        record = RoundRecord(kind=config.proposer, parent_id=parent.id)
        report.round_log.append(record)
        drafts = _round_drafts(config.proposer, parent, evolved, buffer, questions_by_id,
                               proposer, config, step, rngs.proposer, report)
        if not drafts:
            continue
        record.candidates = len(drafts)

        remaining = needed - len(admitted)
        if config.enable_verify:
            result = verify_candidates(drafts, parent, validation, params, worker, remaining,
                                       config.acceptance_ratio, rngs.seed, step,
                                       config.common_random_numbers)
            record.validation_size = len(validation)
            record.rollouts = result.rollouts
            report.verification_rollouts += result.rollouts
            admitted.extend(result.admitted)
        else:
            admitted.extend(drafts[:remaining])

    report.admitted = len(admitted)
    if len(admitted) < needed:
        shortfall = needed - len(admitted)
        logger.info(f"Step {step}: filling {shortfall} slot(s) with mutation variants")
        admitted.extend(mutation_propose(parents[0], rngs.proposer, shortfall))
        report.mutation_fills = shortfall

    if not config.preserve_parent_weights:
        for parent in parents:
            parent.reset_weight()
    members = list(parents)
    for draft in admitted:
        members.append(evolved.new_candidate(draft.text, draft.features, step, draft.parent_id))
    evolved.replace_candidates(members)

    logger.info(f"Step {step}: evolution kept {[p.id for p in parents]}, added "
                f"{[m.id for m in members[len(parents):]]} in {report.rounds} round(s)")
    return evolved, report
