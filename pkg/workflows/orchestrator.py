"""
Co-evolution orchestrator
Runs the training loop: instruction sampling, grouped rollouts, the policy update, importance
weights, scheduled pruning and evolution, checkpoints and the run summary
"""

import json
import logging
import math
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from agents.policy_agent import PolicyAgent
from core.errors import StructuralError
from core.rng_streams import ROLLOUT_TAG, WARMUP_TAG, RngStreams, derive_seed
from core.run_config import RunConfig
from environment.knowledge_base import Dataset, build_dataset
from environment.search_env import SearchEnvironment
from environment.trajectory import Trajectory
from llmabstraction import create_generator_client
from llmabstraction.llmcore.llm_client import LLMClient
from monitoring.metrics_recorder import MetricsRecorder
from policy.grpo import GroupRollout, apply_update, batch_loss
from policy.softmax_policy import PolicyParams, prior_parameters
from population.instruction_population import Population
from proposer.evolution import EvolutionReport, TextProposer, evolve_population, initial_population
from proposer.prompt_builder import PromptBuilder
from replay.replay_buffer import ReplayBuffer, ReplayRecord
from .rollout import RolloutRequest, RolloutWorker
from .run_state import (
    METRICS_FILE, SUMMARY_FILE, RunCounters, RunState, load_run_config
)

logger = logging.getLogger(__name__)

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def resolve_path(path: str) -> str:
    """Path as given when it exists, else relative to the project root"""
    if os.path.isabs(path) or os.path.exists(path):
        return path
    candidate = os.path.join(PROJECT_ROOT, path)
    return candidate if os.path.exists(candidate) else path


@dataclass
class RunSummary:
    steps: int
    best_instruction_id: int
    best_instruction_text: str
    best_weight: float
    counters: RunCounters

    def to_dict(self) -> Dict[str, Any]:
        return {
            'steps': self.steps,
            'best_instruction': {
                'id': self.best_instruction_id,
                'text': self.best_instruction_text,
                'weight': self.best_weight,
            },
            'generator_calls': self.counters.generator_calls,
            'verification_rollouts': self.counters.verification_rollouts,
            'evolution_events': self.counters.evolution_events,
            'prune_events': self.counters.prune_events,
            'buffer_insertions': self.counters.buffer_insertions,
        }


class CoEvolutionOrchestrator:
    """
    Owns one run and its checkpoint directory.

    Each training step is computed on copies and committed at the end, so a step that
    raises leaves the run state (random streams included) as it was.
    """

    def __init__(self, config: RunConfig, dataset: Optional[Dataset] = None,
                 client: Optional[LLMClient] = None):
        self.config = config.validate()
        self.output_dir = config.checkpoint_dir
        self.dataset = dataset or build_dataset(
            config.dataset.seed, config.dataset.train_questions, config.dataset.eval_questions,
            config.dataset.depth_mixture, config.dataset.noise_facts)
        if not self.dataset.train:
            raise StructuralError("Dataset has no training questions")
        self.questions_by_id = self.dataset.question_index()
        self.env = SearchEnvironment(self.dataset.kb, config.max_turns, config.memory_slots)
        self.worker = RolloutWorker(self.env, config.rollout_workers)
        self.proposer: Optional[TextProposer] = None
        if config.proposer != 'mutation' and config.enable_evolve and not config.static_instruction:
            client = client or create_generator_client(config.generator, self.output_dir)
            self.proposer = TextProposer(client, PromptBuilder(resolve_path(config.templates_dir)),
                                         config.candidates_per_call)
        self.metrics = MetricsRecorder(os.path.join(self.output_dir, METRICS_FILE),
                                       config.metrics_flush_every)
        self.state: Optional[RunState] = None
        # reports of the events run by this process, oldest first
        self.evolution_reports: List[EvolutionReport] = []

    # ---------------------------------------------------------------- setup

    @property
    def population_frozen(self) -> bool:
        """No online prune or evolve for static runs and the offline evolution stages"""
        return self.config.static_instruction or self.config.evolution_stage != 'online'

    def _seed_instruction(self) -> str:
        path = resolve_path(self.config.seed_instruction_file)
        if not os.path.exists(path):
            raise StructuralError(f"Seed instruction file not found: {path}")
        with open(path, 'r', encoding='utf-8') as f:
            return f.read().strip()

    def initialize(self) -> RunState:
        """Fresh state at step 0, with an empty metrics file and the initial checkpoint"""
        config = self.config
        rngs = RngStreams(config.seed)
        seed_only = config.static_instruction or config.evolution_stage == 'post'
        population = initial_population(self._seed_instruction(), config, rngs.proposer,
                                        pinned=seed_only)
        counters = RunCounters(generator_calls=0 if seed_only else 1)
        self.state = RunState(
            step=0,
            population=population,
            buffer=ReplayBuffer(config.buffer_capacity, config.failure_threshold, config.recency_steps),
            params=prior_parameters(self.env.actions),
            rngs=rngs,
            counters=counters,
        )
        self.metrics.reset()
        self.checkpoint()
        logger.info(f"Initialized run in {self.output_dir}: {len(population)} instruction(s), "
                    f"{len(self.dataset.train)} training question(s), proposer={config.proposer}")
        return self.state

    @classmethod
    def resume(cls, checkpoint_dir: str, steps: Optional[int] = None,
               client: Optional[LLMClient] = None) -> 'CoEvolutionOrchestrator':
        """
        Reload a run from its checkpoint directory

        Args:
            checkpoint_dir: Directory written by a previous run
            steps: New total step count (extends a finished run)
        """
        config = load_run_config(checkpoint_dir)
        config.checkpoint_dir = checkpoint_dir
        if steps is not None:
            config.steps = steps
        orchestrator = cls(config, client=client)
        orchestrator.state = RunState.load(checkpoint_dir, config)
        orchestrator.metrics.truncate_from(orchestrator.state.step)
        logger.info(f"Resumed {checkpoint_dir} at step {orchestrator.state.step}")
        return orchestrator

    def _require_state(self) -> RunState:
        if self.state is None:
            raise StructuralError("Run is not initialized")
        return self.state

    # ---------------------------------------------------------------- training

    def _rollout_batch(self, state: RunState, population: Population, step_key: int,
                       tag: int, params: PolicyParams) -> Tuple[List[Trajectory], List[int]]:
        """batch_size questions, one sampled instruction each, group_size rollouts under theta_old"""
        config = self.config
        train = self.dataset.train
        question_idx = state.rngs.rollout.integers(len(train), size=config.batch_size)
        agent = PolicyAgent(params, which='old')

        requests = []
        instruction_ids = []
        for b, q_idx in enumerate(question_idx):
            question = train[int(q_idx)]
            instruction_id = population.sample_instruction(state.rngs.sampling)
            features = population.get(instruction_id).features
            instruction_ids.append(instruction_id)
            for g in range(config.group_size):
                seed = derive_seed(config.seed, tag, step_key, b, g)
                requests.append(RolloutRequest(question, instruction_id, features, seed))
        return self.worker.run_many(agent, requests), instruction_ids

    def _policy_update(self, params: PolicyParams,
                       trajectories: List[Trajectory]) -> Tuple[PolicyParams, float]:
        config = self.config
        size = config.group_size
        groups = [GroupRollout.from_trajectories(trajectories[i:i + size])
                  for i in range(0, len(trajectories), size)]
        loss = 0.0
        for _ in range(config.inner_epochs):
            loss, gradient = batch_loss(groups, params, config.clip_eps, config.kl_coef)
            params = apply_update(params, gradient, config.learning_rate)
        return params, loss

    def _record_weights(self, population: Population, trajectories: List[Trajectory], step: int):
        """One window push per instruction used: the mean of all its rewards this step"""
        rewards: Dict[int, List[float]] = {}
        for trajectory in trajectories:
            rewards.setdefault(trajectory.instruction_id, []).append(trajectory.reward)
        for instruction_id in sorted(rewards):
            population.record_step_reward(instruction_id, float(np.mean(rewards[instruction_id])), step)

    def maybe_prune(self, population: Population, step: int) -> List[int]:
        """Successive halving on the schedule; returns the removed ids"""
        config = self.config
        if self.population_frozen or not config.enable_prune:
            return []
        if step == 0 or step % config.prune_period != 0 or step >= config.evolve_horizon:
            return []
        if len(population) <= config.num_parents:
            return []
        return population.prune(step)

    def should_evolve(self, step: int) -> bool:
        config = self.config
        if self.population_frozen or not config.enable_evolve:
            return False
        return step % config.evolve_period == 0 and step < config.evolve_horizon

    def maybe_evolve(self, population: Population, buffer: ReplayBuffer, params: PolicyParams,
                     rngs: RngStreams, step: int) -> Tuple[Population, Optional[EvolutionReport]]:
        if not self.should_evolve(step):
            return population, None
        return evolve_population(population, buffer, params, self.worker, self.questions_by_id,
                                 self.config, step, rngs, self.proposer)

    def train_step(self) -> Dict[str, Any]:
        """
        One step, committed as a whole

        Returns:
            The metrics row of the step
        """
        config = self.config
        state = self._require_state()
        step = state.step
        if step >= config.steps:
            raise StructuralError(f"Step {step} is past the configured {config.steps} steps")
        snapshot = state.rngs.state_dict()
        try:
            params = state.params.copy()
            params.refresh_old()
            population = Population.from_dict(state.population.to_dict())
            buffer = state.buffer.copy()

            trajectories, instruction_ids = self._rollout_batch(
                state, population, step, ROLLOUT_TAG, params)
            texts = [population.get(i).text for i in instruction_ids]
            params, loss = self._policy_update(params, trajectories)
            self._record_weights(population, trajectories, step)
            for trajectory in trajectories:
                buffer.push(ReplayRecord(trajectory.instruction_id, trajectory.question_id,
                                         trajectory, trajectory.reward, step))

            event = None
            pruned = self.maybe_prune(population, step)
            if pruned:
                event = 'prune'
            population, report = self.maybe_evolve(population, buffer, params, state.rngs, step)
            if report is not None:
                event = 'evolve'
        except Exception:
            state.rngs.load_state_dict(snapshot)
            logger.error(f"Step {step} aborted; run state left at step {step}")
            raise

        # commit
        state.params = params
        state.population = population
        state.buffer = buffer
        state.step = step + 1
        state.counters.buffer_insertions += len(trajectories)
        if pruned:
            state.counters.prune_events += 1
        if report is not None:
            state.counters.evolution_events += 1
            state.counters.generator_calls += report.generator_calls
            state.counters.verification_rollouts += report.verification_rollouts
            self.evolution_reports.append(report)

        row = {
            'step': step,
            'mean_reward': float(np.mean([t.reward for t in trajectories])),
            'mean_tool_calls': float(np.mean([t.tool_calls for t in trajectories])),
            'active_instruction_chars': float(np.mean([len(text) for text in texts])),
            'mean_response_items': float(np.mean([len(t.items) for t in trajectories])),
            'population_size': len(population),
            'best_weight': float(population.ranked()[0].weight),
            'event': event,
        }
        self.metrics.record(row)
        logger.debug(f"Step {step}: loss={loss:.6f} reward={row['mean_reward']:.3f} event={event}")
        return row

    # ---------------------------------------------------------------- offline stages

    def _offline_evolution(self, step_key: int):
        """
        Evolution events without gradient updates, for the pre and post stages

        Each event is preceded by one warm-up batch that fills the buffer and the weights;
        a last warm-up batch scores the final members.
        """
        config = self.config
        state = self._require_state()
        events = math.ceil(config.evolve_horizon / config.evolve_period)
        for event in range(events + 1):
            params = state.params.copy()
            params.refresh_old()
            trajectories, _ = self._rollout_batch(state, state.population, event, WARMUP_TAG, params)
            self._record_weights(state.population, trajectories, step_key)
            for trajectory in trajectories:
                state.buffer.push(ReplayRecord(trajectory.instruction_id, trajectory.question_id,
                                               trajectory, trajectory.reward, step_key))
            state.counters.buffer_insertions += len(trajectories)
            if event == events or not config.enable_evolve:
                break
            state.population, report = evolve_population(
                state.population, state.buffer, state.params, self.worker, self.questions_by_id,
                config, step_key, state.rngs, self.proposer)
            state.counters.evolution_events += 1
            state.counters.generator_calls += report.generator_calls
            state.counters.verification_rollouts += report.verification_rollouts
            self.evolution_reports.append(report)
        state.counters.offline_evolution_done = True
        logger.info(f"Offline evolution ({config.evolution_stage}) finished with "
                    f"{state.counters.evolution_events} event(s)")

    # ---------------------------------------------------------------- run

    def checkpoint(self):
        state = self._require_state()
        self.metrics.flush()
        state.save(self.output_dir, self.config)

    def summary(self) -> RunSummary:
        state = self._require_state()
        best = state.population.get(state.population.best_instruction())
        return RunSummary(steps=state.step, best_instruction_id=best.id,
                          best_instruction_text=best.text, best_weight=best.weight,
                          counters=state.counters)

    def run(self) -> RunSummary:
        """
        Train to the configured step count and write the final checkpoint and summary.json

        A step that raises is rolled back, the last consistent state is checkpointed and the
        error is re-raised.
        """
        config = self.config
        state = self.state or self.initialize()
        logger.info(f"Running steps {state.step}..{config.steps - 1}")

        try:
            if (config.evolution_stage == 'pre' and not config.static_instruction
                    and not state.counters.offline_evolution_done):
                self._offline_evolution(step_key=0)
                self.checkpoint()
            while state.step < config.steps:
                self.train_step()
                if state.step % config.metrics_flush_every == 0:
                    self.checkpoint()
            if (config.evolution_stage == 'post' and not config.static_instruction
                    and not state.counters.offline_evolution_done):
                self._offline_evolution(step_key=config.steps)
        except Exception:
            self.checkpoint()
            raise

        self.checkpoint()
        summary = self.summary()
        with open(os.path.join(self.output_dir, SUMMARY_FILE), 'w', encoding='utf-8') as f:
            json.dump(summary.to_dict(), f, indent=2)
        logger.info(f"Run finished: best instruction {summary.best_instruction_id} "
                    f"(weight {summary.best_weight:.3f}), {summary.counters.generator_calls} "
                    f"generator call(s), {summary.counters.evolution_events} evolution event(s)")
        return summary
