"""
Command-line interface
run, resume, evaluate, export, ablate and dataset subcommands over the library operations
"""

import argparse
import csv
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from agents.agent_registry import AgentRegistry
from core.config_loader import ConfigLoader, parse_override_args
from core.errors import ConfigError, UnknownCandidateError
from core.logging_config import setup_logging
from core.rng_streams import EVAL_TAG, derive_seed
from core.run_config import PROPOSER_KINDS, RunConfig
from environment.instruction_features import instruction_features_from_text
from environment.knowledge_base import build_dataset, load_questions, save_questions
from environment.search_env import SearchEnvironment
from monitoring.metrics_recorder import read_metrics
from monitoring.series_export import SERIES, UnknownSeriesError, discover_runs, export_series
from workflows.orchestrator import CoEvolutionOrchestrator
from workflows.rollout import RolloutWorker, evaluate
from workflows.run_state import RunState, load_run_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

DEFAULT_CONFIG = 'config/default_run.json'


def _csv_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(',') if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='run_coevolution.py',
        description='Co-evolve search instructions and a tool-use policy')
    parser.add_argument('--log-level', default='INFO', help='Logging level (default INFO)')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Train from a JSON run file; extra --key=value pairs override it')
    run.add_argument('--config', default=DEFAULT_CONFIG, help='JSON run file')
    run.add_argument('--seed', type=int, help='Run seed')
    run.add_argument('--proposer', choices=PROPOSER_KINDS, help='Instruction proposer')
    run.add_argument('--steps', type=int, help='Total training steps')
    run.add_argument('--static', action='store_true', help='Pin the population to the seed instruction')
    run.add_argument('--output', help='Checkpoint directory')

    resume = sub.add_parser('resume', help='Continue a run from its checkpoint directory')
    resume.add_argument('checkpoint_dir')
    resume.add_argument('--steps', type=int, help='New total step count')

    ev = sub.add_parser('evaluate', help='Greedy exact-match evaluation of a checkpoint')
    ev.add_argument('checkpoint_dir')
    ev.add_argument('--questions', help='Question JSONL file (default: the evaluation split)')
    ev.add_argument('--instruction', default='best', help="'best', an instruction id, or literal text")
    ev.add_argument('--agent', default='policy', help='policy, oracle or broad')
    ev.add_argument('--output', help='Write the report as JSON here as well')

    ex = sub.add_parser('export', help='Write metric series as CSV')
    ex.add_argument('checkpoint_dirs', nargs='+',
                    help='Run directories, or one directory holding several runs')
    ex.add_argument('--series', default=','.join(SERIES[:4]), help='Comma-separated series names')
    ex.add_argument('--output', required=True, help='Output directory')

    ab = sub.add_parser('ablate', help='Sweep proposers, temperatures and parent counts over seeds')
    ab.add_argument('--config', default=DEFAULT_CONFIG, help='JSON run file')
    ab.add_argument('--proposers', default='paraphrase,history,reflection')
    ab.add_argument('--seeds', default='5', help='A count, or a comma-separated seed list')
    ab.add_argument('--temperatures', help='Comma-separated sampling temperatures')
    ab.add_argument('--parents', help='Comma-separated parent counts')
    ab.add_argument('--steps', type=int)
    ab.add_argument('--workers', type=int, default=0, help='Parallel processes (0 runs in-process)')
    ab.add_argument('--output', required=True, help='Directory for cell checkpoints and ablation.csv')

    ds = sub.add_parser('dataset', help='Write the knowledge base and questions of a dataset seed')
    ds.add_argument('--config', help='Take dataset settings from this JSON run file')
    ds.add_argument('--seed', type=int)
    ds.add_argument('--train', type=int)
    ds.add_argument('--eval', type=int)
    ds.add_argument('--output', required=True)
    return parser


# ---------------------------------------------------------------- run / resume

def _load_config(path: str, overrides: Dict[str, str]) -> RunConfig:
    return ConfigLoader().load(path, overrides)


def cmd_run(args: argparse.Namespace, extra: Sequence[str]) -> int:
    overrides = parse_override_args(list(extra))
    for key in ('seed', 'proposer', 'steps'):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = str(value)
    if args.static:
        overrides['static_instruction'] = 'true'
    if args.output:
        overrides['checkpoint_dir'] = args.output
    config = _load_config(args.config, overrides)
    summary = CoEvolutionOrchestrator(config).run()
    print(json.dumps(summary.to_dict(), indent=2))
    return EXIT_OK


def cmd_resume(args: argparse.Namespace) -> int:
    summary = CoEvolutionOrchestrator.resume(args.checkpoint_dir, steps=args.steps).run()
    print(json.dumps(summary.to_dict(), indent=2))
    return EXIT_OK


# ---------------------------------------------------------------- evaluate

def evaluate_checkpoint(checkpoint_dir: str, questions_path: Optional[str] = None,
                        instruction: str = 'best', agent_kind: str = 'policy') -> Dict[str, Any]:
    """Greedy evaluation report of one checkpoint, as a dictionary"""
    config = load_run_config(checkpoint_dir)
    state = RunState.load(checkpoint_dir, config)
    dataset = build_dataset(config.dataset.seed, config.dataset.train_questions,
                            config.dataset.eval_questions, config.dataset.depth_mixture,
                            config.dataset.noise_facts)
    questions = load_questions(questions_path) if questions_path else dataset.eval

    if instruction == 'best':
        candidate = state.population.get(state.population.best_instruction())
        instruction_id, features = candidate.id, candidate.features
    elif instruction.isdigit():
        candidate = state.population.get(int(instruction))
        instruction_id, features = candidate.id, candidate.features
    else:
        instruction_id, features = -1, instruction_features_from_text(instruction)

    agent = AgentRegistry().create(agent_kind, state.params)
    worker = RolloutWorker(SearchEnvironment(dataset.kb, config.max_turns, config.memory_slots))
    seeds = [derive_seed(config.seed, EVAL_TAG, q.id) for q in questions]
    report = evaluate(worker, agent, questions, instruction_id, features, seeds)
    result = report.to_dict()
    result.update({'instruction_id': instruction_id, 'agent': agent_kind})
    return result


def cmd_evaluate(args: argparse.Namespace) -> int:
    result = evaluate_checkpoint(args.checkpoint_dir, args.questions, args.instruction, args.agent)
    print(json.dumps(result, indent=2))
    if args.output:
        with open(args.output, 'w', encoding='utf-8') as f:
            json.dump(result, f, indent=2)
    return EXIT_OK


# ---------------------------------------------------------------- export

def cmd_export(args: argparse.Namespace) -> int:
    names = _csv_list(args.series)
    for name in names:
        if name not in SERIES:
            raise UnknownSeriesError(name)
    run_dirs: List[str] = []
    for path in args.checkpoint_dirs:
        run_dirs.extend(discover_runs(path))
    for path in export_series(run_dirs, names, args.output):
        print(path)
    return EXIT_OK


# ---------------------------------------------------------------- ablate

def final_quartile_mean(rows: Sequence[Dict[str, Any]], key: str = 'mean_reward') -> float:
    """Mean of a series over the last quarter of the recorded steps"""
    if not rows:
        return 0.0
    tail = max(int(math.ceil(len(rows) / 4)), 1)
    return float(np.mean([row[key] for row in rows[-tail:]]))


def run_ablation_cell(config_dict: Dict[str, Any]) -> Dict[str, Any]:
    """One sweep cell; module level so worker processes can import it"""
    config = RunConfig.from_dict(config_dict).validate()
    summary = CoEvolutionOrchestrator(config).run()
    rows = read_metrics(os.path.join(config.checkpoint_dir, 'metrics.jsonl'))
    return {
        'proposer': config.proposer,
        'sample_temperature': config.sample_temperature,
        'num_parents': config.num_parents,
        'seed': config.seed,
        'final_reward': final_quartile_mean(rows, 'mean_reward'),
        'final_tool_calls': final_quartile_mean(rows, 'mean_tool_calls'),
        'best_instruction_id': summary.best_instruction_id,
        'best_weight': summary.best_weight,
        'generator_calls': summary.counters.generator_calls,
        'checkpoint_dir': config.checkpoint_dir,
    }


def ablation_cells(base: RunConfig, proposers: Sequence[str], seeds: Sequence[int],
                   temperatures: Sequence[float], parents: Sequence[int],
                   output_dir: str) -> List[Dict[str, Any]]:
    cells = []
    for proposer, temperature, n_parent, seed in itertools.product(proposers, temperatures, parents, seeds):
        if proposer not in PROPOSER_KINDS:
            raise ConfigError(f"unknown proposer '{proposer}'", 'proposers')
        data = base.to_dict()
        data.update({
            'proposer': proposer,
            'sample_temperature': temperature,
            'num_parents': n_parent,
            'seed': seed,
            'checkpoint_dir': os.path.join(
                output_dir, f"{proposer}_t{temperature:g}_p{n_parent}_s{seed}"),
        })
        RunConfig.from_dict(data).validate()
        cells.append(data)
    return cells


def cmd_ablate(args: argparse.Namespace) -> int:
    overrides = {'steps': str(args.steps)} if args.steps is not None else {}
    base = _load_config(args.config, overrides)
    seed_items = _csv_list(args.seeds)
    if len(seed_items) == 1:
        seeds = list(range(int(seed_items[0])))
    else:
        seeds = [int(s) for s in seed_items]
    temperatures = [float(t) for t in _csv_list(args.temperatures)] if args.temperatures \
        else [base.sample_temperature]
    parents = [int(p) for p in _csv_list(args.parents)] if args.parents else [base.num_parents]
    cells = ablation_cells(base, _csv_list(args.proposers), seeds, temperatures, parents, args.output)
    logger.info(f"Ablation over {len(cells)} cell(s), workers={args.workers}")

    if args.workers > 0:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(run_ablation_cell, cells))
    else:
        results = [run_ablation_cell(cell) for cell in cells]

    os.makedirs(args.output, exist_ok=True)
    path = os.path.join(args.output, 'ablation.csv')
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=list(results[0].keys()) if results else ['proposer'],
                                lineterminator='\n')
        writer.writeheader()
        for row in results:
            writer.writerow(row)
    print(path)
    return EXIT_OK


# ---------------------------------------------------------------- dataset

def cmd_dataset(args: argparse.Namespace) -> int:
    settings = _load_config(args.config, {}).dataset if args.config else RunConfig().dataset
    seed = settings.seed if args.seed is None else args.seed
    train = settings.train_questions if args.train is None else args.train
    held_out = settings.eval_questions if args.eval is None else args.eval
    dataset = build_dataset(seed, train, held_out, settings.depth_mixture, settings.noise_facts)
    os.makedirs(args.output, exist_ok=True)
    dataset.kb.to_jsonl(os.path.join(args.output, 'kb.jsonl'))
    save_questions(dataset.train, os.path.join(args.output, 'questions.jsonl'))
    save_questions(dataset.eval, os.path.join(args.output, 'eval_questions.jsonl'))
    print(f"{len(dataset.kb)} facts, {len(dataset.train)} training and {len(dataset.eval)} "
          f"evaluation questions written to {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------- entry

def _error_line(kind: str, detail: Any) -> str:
    return f"error: {kind}: {detail}"


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and dispatch

    Returns:
        0 on success, 2 for configuration and lookup errors, 1 for anything else
    """
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if args.command != 'run' and extra:
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    setup_logging(args.log_level)

    try:
        if args.command == 'run':
            return cmd_run(args, extra)
        if args.command == 'resume':
            return cmd_resume(args)
        if args.command == 'evaluate':
            return cmd_evaluate(args)
        if args.command == 'export':
            return cmd_export(args)
        if args.command == 'ablate':
            return cmd_ablate(args)
        return cmd_dataset(args)
    except ConfigError as e:
        print(_error_line('config', e), file=sys.stderr)
        return EXIT_USAGE
    except UnknownCandidateError as e:
        print(_error_line('unknown_instruction', e), file=sys.stderr)
        return EXIT_USAGE
    except UnknownSeriesError as e:
        print(_error_line('unknown_series', e), file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f"{args.command} failed")
        print(_error_line(type(e).__name__, e), file=sys.stderr)
        return EXIT_FAILURE
