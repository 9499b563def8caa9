"""Tests for the co-evolution training loop, its schedule, checkpoints and offline stages."""

import json
import os

import numpy as np
import pytest

from core.errors import NumericError, StructuralError
from core.run_config import RunConfig
from llmabstraction import LLMClient, ScriptedFacade
from monitoring import read_metrics
import workflows.orchestrator as orchestrator_module
from workflows.orchestrator import CoEvolutionOrchestrator
from workflows.run_state import METRICS_FILE, POPULATION_FILE, RNG_FILE, SUMMARY_FILE


def small_config(tmp_path, name='run', **overrides):
    values = dict(steps=20, evolve_horizon=10, prune_period=5, evolve_period=10, batch_size=2,
                  group_size=5, validation_size=10, proposer='mutation', acceptance_ratio=0.0,
                  metrics_flush_every=5, checkpoint_dir=str(tmp_path / name))
    values.update(overrides)
    config = RunConfig(**values)
    config.dataset.train_questions = 40
    config.dataset.eval_questions = 10
    return config


def read_bytes(directory, name):
    with open(os.path.join(directory, name), 'rb') as f:
        return f.read()


class TestStepAccounting:
    """Test what a single training step produces."""

    def test_one_question_one_group(self, tmp_path):
        config = small_config(tmp_path, batch_size=1, enable_evolve=False)
        orchestrator = CoEvolutionOrchestrator(config)
        state = orchestrator.initialize()
        row = orchestrator.train_step()
        assert len(state.buffer) == 5
        assert state.counters.buffer_insertions == 5
        assert sum(len(c.reward_window) for c in state.population) == 1
        assert state.step == 1
        assert row['step'] == 0
        assert row['event'] is None
        assert row['population_size'] == 7
        assert 0.0 <= row['mean_reward'] <= 1.0

    def test_row_fields(self, tmp_path):
        orchestrator = CoEvolutionOrchestrator(small_config(tmp_path))
        orchestrator.initialize()
        row = orchestrator.train_step()
        assert list(row) == ['step', 'mean_reward', 'mean_tool_calls', 'active_instruction_chars',
                             'mean_response_items', 'population_size', 'best_weight', 'event']

    def test_step_past_end(self, tmp_path):
        orchestrator = CoEvolutionOrchestrator(small_config(tmp_path, steps=0, evolve_horizon=0))
        orchestrator.initialize()
        with pytest.raises(StructuralError):
            orchestrator.train_step()

    def test_uninitialized(self, tmp_path):
        with pytest.raises(StructuralError):
            CoEvolutionOrchestrator(small_config(tmp_path)).train_step()


class TestSchedule:
    """Test when pruning and evolution fire."""

    def test_default_schedule_has_ten_evolution_events(self, tmp_path):
        config = RunConfig(checkpoint_dir=str(tmp_path / 'default'))
        config.dataset.train_questions = 20
        config.dataset.eval_questions = 0
        orchestrator = CoEvolutionOrchestrator(config)
        fired = [t for t in range(config.steps) if orchestrator.should_evolve(t)]
        assert fired == list(range(0, 150, 15))
        assert len(fired) == config.evolution_events

    def test_prune_guards(self, tmp_path):
        orchestrator = CoEvolutionOrchestrator(small_config(tmp_path))
        state = orchestrator.initialize()
        population = state.population
        assert orchestrator.maybe_prune(population, 0) == []
        assert orchestrator.maybe_prune(population, 3) == []
        assert orchestrator.maybe_prune(population, 10) == []
        assert len(orchestrator.maybe_prune(population, 5)) == 3
        assert len(population) == 4

    def test_events_in_metrics(self, tmp_path):
        config = small_config(tmp_path)
        summary = CoEvolutionOrchestrator(config).run()
        rows = read_metrics(os.path.join(config.checkpoint_dir, METRICS_FILE))
        assert len(rows) == 20
        assert [r['step'] for r in rows] == list(range(20))
        assert {r['step']: r['event'] for r in rows if r['event']} == {0: 'evolve', 5: 'prune'}
        assert rows[0]['population_size'] == 7
        assert rows[5]['population_size'] == 4
        assert rows[19]['population_size'] == 4
        assert summary.counters.evolution_events == 1
        assert summary.counters.prune_events == 1
        # the initialization call only; mutation rounds send no request
        assert summary.counters.generator_calls == 1
        assert summary.counters.verification_rollouts > 0
        assert summary.counters.verification_rollouts % 7 == 0
        assert summary.counters.buffer_insertions == 20 * 2 * 5

    def test_text_proposer_calls_counted_per_request(self, tmp_path):
        config = small_config(tmp_path, proposer='paraphrase')
        client = LLMClient(ScriptedFacade('scripted'))
        orchestrator = CoEvolutionOrchestrator(config, client=client)
        summary = orchestrator.run()
        requested = sum(r.requested for report in orchestrator.evolution_reports
                        for r in report.round_log)
        assert requested == client.call_count >= 1
        assert summary.counters.generator_calls == 1 + client.call_count

    def test_static_run_keeps_seed_instruction(self, tmp_path):
        config = small_config(tmp_path, static_instruction=True)
        summary = CoEvolutionOrchestrator(config).run()
        rows = read_metrics(os.path.join(config.checkpoint_dir, METRICS_FILE))
        assert all(r['population_size'] == 1 and r['event'] is None for r in rows)
        assert summary.counters.generator_calls == 0
        assert summary.counters.evolution_events == 0
        assert summary.best_instruction_id == 0


class TestRunOutputs:
    """Test checkpoints, summary and determinism."""

    def test_zero_steps(self, tmp_path):
        config = small_config(tmp_path, steps=0, evolve_horizon=0)
        summary = CoEvolutionOrchestrator(config).run()
        assert summary.steps == 0
        assert read_bytes(config.checkpoint_dir, METRICS_FILE) == b''
        with open(os.path.join(config.checkpoint_dir, SUMMARY_FILE), 'r', encoding='utf-8') as f:
            data = json.load(f)
        assert data['steps'] == 0
        assert data['best_instruction']['id'] == 0
        assert data['buffer_insertions'] == 0

    def test_summary_file(self, tmp_path):
        config = small_config(tmp_path)
        summary = CoEvolutionOrchestrator(config).run()
        with open(os.path.join(config.checkpoint_dir, SUMMARY_FILE), 'r', encoding='utf-8') as f:
            data = json.load(f)
        assert data == summary.to_dict()
        assert set(data) == {'steps', 'best_instruction', 'generator_calls', 'verification_rollouts',
                             'evolution_events', 'prune_events', 'buffer_insertions'}

    def test_same_seed_same_files(self, tmp_path):
        first = small_config(tmp_path, name='a')
        second = small_config(tmp_path, name='b')
        CoEvolutionOrchestrator(first).run()
        CoEvolutionOrchestrator(second).run()
        for name in (METRICS_FILE, POPULATION_FILE):
            assert read_bytes(first.checkpoint_dir, name) == read_bytes(second.checkpoint_dir, name)

    def test_different_seed_differs(self, tmp_path):
        first = small_config(tmp_path, name='a')
        second = small_config(tmp_path, name='b', seed=1)
        CoEvolutionOrchestrator(first).run()
        CoEvolutionOrchestrator(second).run()
        assert read_bytes(first.checkpoint_dir, METRICS_FILE) != read_bytes(second.checkpoint_dir, METRICS_FILE)


class TestResume:
    """Test that checkpoint and resume reproduce an uninterrupted run."""

    def test_resume_matches_straight_run(self, tmp_path):
        straight = small_config(tmp_path, name='straight')
        CoEvolutionOrchestrator(straight).run()

        split = small_config(tmp_path, name='split', steps=10)
        CoEvolutionOrchestrator(split).run()
        resumed = CoEvolutionOrchestrator.resume(split.checkpoint_dir, steps=20)
        assert resumed.state.step == 10
        summary = resumed.run()

        assert summary.steps == 20
        for name in (METRICS_FILE, POPULATION_FILE):
            assert read_bytes(straight.checkpoint_dir, name) == read_bytes(split.checkpoint_dir, name)

    def test_resume_discards_rows_past_checkpoint(self, tmp_path):
        config = small_config(tmp_path)
        orchestrator = CoEvolutionOrchestrator(config)
        orchestrator.initialize()
        for _ in range(7):
            orchestrator.train_step()
        orchestrator.checkpoint()
        # two more rows reach the file without a matching checkpoint
        orchestrator.train_step()
        orchestrator.train_step()
        orchestrator.metrics.flush()
        assert len(read_metrics(os.path.join(config.checkpoint_dir, METRICS_FILE))) == 9

        resumed = CoEvolutionOrchestrator.resume(config.checkpoint_dir)
        assert resumed.state.step == 7
        rows = read_metrics(os.path.join(config.checkpoint_dir, METRICS_FILE))
        assert [r['step'] for r in rows] == list(range(7))

    def test_resume_missing_checkpoint(self, tmp_path):
        with pytest.raises(StructuralError):
            CoEvolutionOrchestrator.resume(str(tmp_path / 'nothing'))


class TestAtomicStep:
    """Test that a failing step leaves the run untouched."""

    def test_failed_update_rolls_back(self, tmp_path, monkeypatch):
        config = small_config(tmp_path)
        orchestrator = CoEvolutionOrchestrator(config)
        state = orchestrator.initialize()
        rng_before = json.dumps(state.rngs.state_dict(), sort_keys=True)
        population_before = state.population.to_dict()
        theta_before = state.params.theta.copy()

        def boom(*args, **kwargs):
            raise NumericError("Gradient has 1 non-finite entries; step aborted")

        monkeypatch.setattr(orchestrator_module, 'apply_update', boom)
        with pytest.raises(NumericError):
            orchestrator.train_step()

        assert state.step == 0
        assert json.dumps(state.rngs.state_dict(), sort_keys=True) == rng_before
        assert state.population.to_dict() == population_before
        assert np.array_equal(state.params.theta, theta_before)
        assert len(state.buffer) == 0
        assert state.counters.buffer_insertions == 0

        monkeypatch.undo()
        retried = orchestrator.train_step()
        reference = CoEvolutionOrchestrator(small_config(tmp_path, name='reference'))
        reference.initialize()
        assert retried == reference.train_step()

    def test_failed_run_checkpoints_last_good_step(self, tmp_path, monkeypatch):
        straight = small_config(tmp_path, name='straight')
        CoEvolutionOrchestrator(straight).run()

        config = small_config(tmp_path, name='failing')
        real_update = orchestrator_module.apply_update
        calls = []

        def fail_on_third(*args, **kwargs):
            calls.append(1)
            if len(calls) == 3:
                raise NumericError("Update produced non-finite parameters; step aborted")
            return real_update(*args, **kwargs)

        monkeypatch.setattr(orchestrator_module, 'apply_update', fail_on_third)
        with pytest.raises(NumericError):
            CoEvolutionOrchestrator(config).run()
        with open(os.path.join(config.checkpoint_dir, RNG_FILE), 'r', encoding='utf-8') as f:
            assert json.load(f)['step'] == 2
        assert len(read_metrics(os.path.join(config.checkpoint_dir, METRICS_FILE))) == 2

        monkeypatch.undo()
        CoEvolutionOrchestrator.resume(config.checkpoint_dir).run()
        assert read_bytes(config.checkpoint_dir, METRICS_FILE) == read_bytes(straight.checkpoint_dir, METRICS_FILE)


class TestOfflineStages:
    """Test evolution before or after training instead of during it."""

    def test_pre_stage(self, tmp_path):
        config = small_config(tmp_path, steps=6, evolve_horizon=6, evolve_period=3, evolution_stage='pre')
        orchestrator = CoEvolutionOrchestrator(config)
        summary = orchestrator.run()
        rows = read_metrics(os.path.join(config.checkpoint_dir, METRICS_FILE))
        assert len(rows) == 6
        assert all(r['event'] is None and r['population_size'] == 7 for r in rows)
        assert summary.counters.evolution_events == 2
        assert summary.counters.prune_events == 0
        assert summary.counters.generator_calls == 1
        assert len(orchestrator.evolution_reports) == 2
        assert all(not r.requested for report in orchestrator.evolution_reports for r in report.round_log)
        assert summary.counters.buffer_insertions == (3 + 6) * 2 * 5
        assert orchestrator.state.counters.offline_evolution_done

    def test_post_stage(self, tmp_path):
        config = small_config(tmp_path, steps=6, evolve_horizon=6, evolve_period=3, evolution_stage='post')
        orchestrator = CoEvolutionOrchestrator(config)
        summary = orchestrator.run()
        rows = read_metrics(os.path.join(config.checkpoint_dir, METRICS_FILE))
        assert all(r['population_size'] == 1 for r in rows)
        assert len(orchestrator.state.population) == 7
        assert summary.counters.evolution_events == 2
        assert summary.counters.generator_calls == 0
        assert summary.steps == 6
