"""Tests for the command-line interface and its exit codes."""

import csv
import json
import os

import pytest

from cli.commands import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, final_quartile_mean, main
from monitoring import read_metrics

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SMOKE_CONFIG = os.path.join(PROJECT_ROOT, 'config', 'smoke_run.json')


@pytest.fixture(scope='module')
def smoke_run(tmp_path_factory):
    output = str(tmp_path_factory.mktemp('cli') / 'smoke')
    code = main(['--log-level', 'WARNING', 'run', '--config', SMOKE_CONFIG, '--output', output,
                 '--steps=12', '--batch_size=2'])
    assert code == EXIT_OK
    return output


class TestRunCommand:
    """Test training from the command line."""

    def test_checkpoint_populated(self, smoke_run):
        for name in ('config.json', 'population.json', 'buffer.jsonl', 'policy.bin', 'rng.json',
                     'metrics.jsonl', 'summary.json'):
            assert os.path.exists(os.path.join(smoke_run, name)), name

    def test_overrides_applied(self, smoke_run):
        rows = read_metrics(os.path.join(smoke_run, 'metrics.jsonl'))
        assert len(rows) == 12
        with open(os.path.join(smoke_run, 'config.json'), 'r', encoding='utf-8') as f:
            config = json.load(f)
        assert config['steps'] == 12
        assert config['batch_size'] == 2
        assert config['proposer'] == 'mutation'

    def test_summary_printed(self, tmp_path, capsys):
        output = str(tmp_path / 'static')
        code = main(['run', '--config', SMOKE_CONFIG, '--output', output, '--steps', '10',
                     '--static', '--batch_size=2'])
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary['steps'] == 10
        assert summary['generator_calls'] == 0
        assert summary['best_instruction']['id'] == 0

    def test_missing_config(self, tmp_path, capsys):
        code = main(['run', '--config', str(tmp_path / 'missing.json')])
        assert code == EXIT_USAGE
        assert 'error: config:' in capsys.readouterr().err

    def test_unknown_override(self, tmp_path, capsys):
        code = main(['run', '--config', SMOKE_CONFIG, '--output', str(tmp_path / 'x'), '--stepz=3'])
        assert code == EXIT_USAGE
        assert 'stepz' in capsys.readouterr().err

    def test_short_steps_clamp_horizon(self, tmp_path):
        output = str(tmp_path / 'short')
        code = main(['run', '--config', SMOKE_CONFIG, '--output', output, '--steps', '5',
                     '--batch_size=2'])
        assert code == EXIT_OK
        with open(os.path.join(output, 'config.json'), 'r', encoding='utf-8') as f:
            saved = json.load(f)
        assert (saved['steps'], saved['evolve_horizon']) == (5, 5)
        assert len(read_metrics(os.path.join(output, 'metrics.jsonl'))) == 5

    def test_explicit_horizon_past_steps(self, tmp_path, capsys):
        code = main(['run', '--config', SMOKE_CONFIG, '--output', str(tmp_path / 'x'), '--steps', '5',
                     '--evolve_horizon=10'])
        assert code == EXIT_USAGE
        assert 'evolve_horizon' in capsys.readouterr().err


class TestResumeCommand:
    """Test continuing a run."""

    def test_extends_run(self, tmp_path):
        output = str(tmp_path / 'run')
        assert main(['run', '--config', SMOKE_CONFIG, '--output', output, '--steps=10',
                     '--batch_size=2']) == EXIT_OK
        assert main(['resume', output, '--steps', '14']) == EXIT_OK
        rows = read_metrics(os.path.join(output, 'metrics.jsonl'))
        assert [r['step'] for r in rows] == list(range(14))

    def test_missing_checkpoint(self, tmp_path, capsys):
        assert main(['resume', str(tmp_path / 'none')]) == EXIT_FAILURE
        assert 'error: StructuralError:' in capsys.readouterr().err


class TestEvaluateCommand:
    """Test checkpoint evaluation."""

    def test_best_instruction(self, smoke_run, capsys):
        assert main(['evaluate', smoke_run]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report['count'] == 40
        assert 0.0 <= report['em_rate'] <= 1.0
        assert report['agent'] == 'policy'

    def test_oracle_agent(self, smoke_run, tmp_path, capsys):
        output = str(tmp_path / 'report.json')
        assert main(['evaluate', smoke_run, '--agent', 'oracle', '--output', output]) == EXIT_OK
        with open(output, 'r', encoding='utf-8') as f:
            assert json.load(f)['em_rate'] == 1.0

    def test_literal_instruction(self, smoke_run, capsys):
        assert main(['evaluate', smoke_run, '--instruction', 'Verify each fact.']) == EXIT_OK
        assert json.loads(capsys.readouterr().out)['instruction_id'] == -1

    def test_unknown_instruction_id(self, smoke_run, capsys):
        assert main(['evaluate', smoke_run, '--instruction', '999']) == EXIT_USAGE
        assert 'error: unknown_instruction:' in capsys.readouterr().err

    def test_empty_question_file(self, smoke_run, tmp_path, capsys):
        questions = tmp_path / 'empty.jsonl'
        questions.write_text('')
        assert main(['evaluate', smoke_run, '--questions', str(questions)]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report['count'] == 0
        assert report['em_rate'] == 0.0

    def test_unknown_agent(self, smoke_run):
        assert main(['evaluate', smoke_run, '--agent', 'human']) == EXIT_USAGE


class TestExportCommand:
    """Test CSV export from checkpoints."""

    def test_writes_requested_series(self, smoke_run, tmp_path):
        output = str(tmp_path / 'csv')
        assert main(['export', smoke_run, '--series', 'mean_reward,population_size', '--output', output]) == EXIT_OK
        with open(os.path.join(output, 'mean_reward.csv'), 'r', encoding='utf-8') as f:
            assert len(list(csv.DictReader(f))) == 12
        assert os.path.exists(os.path.join(output, 'population_size.csv'))

    def test_unknown_series(self, smoke_run, tmp_path, capsys):
        code = main(['export', smoke_run, '--series', 'reward', '--output', str(tmp_path / 'csv')])
        assert code == EXIT_USAGE
        assert 'error: unknown_series:' in capsys.readouterr().err


class TestDatasetCommand:
    """Test writing the synthetic dataset."""

    def test_writes_files(self, tmp_path):
        output = str(tmp_path / 'data')
        assert main(['dataset', '--seed', '4', '--train', '30', '--eval', '10', '--output', output]) == EXIT_OK
        with open(os.path.join(output, 'questions.jsonl'), 'r', encoding='utf-8') as f:
            assert len(f.read().splitlines()) == 30
        with open(os.path.join(output, 'eval_questions.jsonl'), 'r', encoding='utf-8') as f:
            assert len(f.read().splitlines()) == 10
        assert os.path.getsize(os.path.join(output, 'kb.jsonl')) > 0


class TestAblateCommand:
    """Test the proposer sweep."""

    def test_final_quartile_mean(self):
        rows = [{'mean_reward': float(i)} for i in range(8)]
        assert final_quartile_mean(rows) == pytest.approx(6.5)
        assert final_quartile_mean([]) == 0.0

    def test_sweep_writes_one_row_per_cell(self, tmp_path):
        output = str(tmp_path / 'sweep')
        code = main(['ablate', '--config', SMOKE_CONFIG, '--proposers', 'mutation', '--seeds', '2',
                     '--steps', '10', '--output', output])
        assert code == EXIT_OK
        with open(os.path.join(output, 'ablation.csv'), 'r', encoding='utf-8') as f:
            rows = list(csv.DictReader(f))
        assert [int(r['seed']) for r in rows] == [0, 1]
        assert all(r['proposer'] == 'mutation' for r in rows)

    def test_short_steps_clamp_horizon(self, tmp_path):
        output = str(tmp_path / 'sweep')
        code = main(['ablate', '--config', SMOKE_CONFIG, '--proposers', 'mutation', '--seeds', '1',
                     '--steps', '4', '--output', output])
        assert code == EXIT_OK
        with open(os.path.join(output, 'mutation_t0.2_p1_s0', 'config.json'), 'r', encoding='utf-8') as f:
            assert json.load(f)['evolve_horizon'] == 4

    def test_unknown_proposer(self, tmp_path):
        code = main(['ablate', '--config', SMOKE_CONFIG, '--proposers', 'crossover', '--seeds', '1',
                     '--output', str(tmp_path / 'sweep')])
        assert code == EXIT_USAGE
