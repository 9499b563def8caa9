"""
Run configuration
Every hyperparameter of a co-evolution run, with defaults matching the published setup.
"""

from dataclasses import dataclass, field, asdict
from typing import Dict, Any, List

from .errors import ConfigError

PROPOSER_KINDS = ('reflection', 'paraphrase', 'history', 'mutation')
EVOLUTION_STAGES = ('online', 'pre', 'post')


@dataclass
class GeneratorConfig:
    """
    Settings for the text generator used by the LLM-backed proposers.

    provider selects a registered facade: 'scripted' is the offline stub,
    'chat_completions' posts to an HTTP endpoint.
    """
    provider: str = 'scripted'
    endpoint: str = ''
    model: str = 'scripted-optimizer'
    timeout: float = 60.0
    max_retries: int = 3
    temperature: float = 1.0
    api_key_env: str = 'GENERATOR_API_KEY'
    audit_file: str = 'generator_audit.jsonl'
    superior_kinds: List[str] = field(default_factory=lambda: ['reflection'])


@dataclass
class DatasetConfig:
    """Size and mixture of the synthetic fact-lookup dataset"""
    seed: int = 0
    train_questions: int = 1000
    eval_questions: int = 200
    depth_mixture: List[float] = field(default_factory=lambda: [0.4, 0.4, 0.2])
    noise_facts: int = 64


@dataclass
class RunConfig:
    """
    Hyperparameters of one run.

    Short symbol in the comments is the name used in the algorithm description.
    """
    steps: int = 300                       # T
    evolve_horizon: int = 150              # T_e
    prune_period: int = 5                  # K_p
    evolve_period: int = 15                # K_e
    group_size: int = 5                    # G
    batch_size: int = 8
    population_size: int = 7               # N_P
    num_parents: int = 1                   # N_parent
    sample_temperature: float = 0.2        # tau_s
    weight_window: int = 5                 # n
    kl_coef: float = 0.001                 # beta
    clip_eps: float = 0.2                  # epsilon
    learning_rate: float = 0.02
    inner_epochs: int = 1
    max_turns: int = 4
    memory_slots: int = 4
    seed: int = 0
    proposer: str = 'reflection'
    acceptance_ratio: float = 1.0
    validation_size: int = 200             # |D_B|
    failures_per_reflection: int = 4
    max_retrials: int = 5
    candidates_per_call: int = 6
    buffer_capacity: int = 4096
    failure_threshold: float = 0.5
    recency_steps: int = 5
    preserve_parent_weights: bool = False
    common_random_numbers: bool = True
    static_instruction: bool = False
    evolution_stage: str = 'online'
    enable_prune: bool = True
    enable_evolve: bool = True
    enable_verify: bool = True
    rollout_workers: int = 0
    metrics_flush_every: int = 10
    checkpoint_dir: str = 'runs/default'
    seed_instruction_file: str = 'config/instructions/seed_instruction.txt'
    templates_dir: str = 'config/templates'
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)

    def validate(self) -> 'RunConfig':
        """Check ranges and cross-field constraints, raising ConfigError on the first violation"""
        for name in ('prune_period', 'evolve_period', 'weight_window', 'max_turns',
                     'batch_size', 'inner_epochs', 'validation_size', 'failures_per_reflection',
                     'max_retrials', 'candidates_per_call', 'buffer_capacity', 'recency_steps',
                     'metrics_flush_every'):
            if getattr(self, name) < 1:
                raise ConfigError(f"must be >= 1, got {getattr(self, name)}", name)
        if self.steps < 0:
            raise ConfigError(f"must be >= 0, got {self.steps}", 'steps')
        if not 0 <= self.evolve_horizon <= self.steps:
            raise ConfigError(
                f"must lie in [0, steps={self.steps}], got {self.evolve_horizon}", 'evolve_horizon')
        if not 1 <= self.num_parents < self.population_size:
            raise ConfigError(
                f"need 1 <= num_parents < population_size, got {self.num_parents} "
                f"and {self.population_size}", 'num_parents')
        if self.memory_slots < 2:
            raise ConfigError(f"must be >= 2, got {self.memory_slots}", 'memory_slots')
        if self.sample_temperature <= 0:
            raise ConfigError("must be > 0", 'sample_temperature')
        if self.group_size < 2:
            raise ConfigError(f"must be >= 2, got {self.group_size}", 'group_size')
        if not 0 <= self.clip_eps < 1:
            raise ConfigError(f"must lie in [0, 1), got {self.clip_eps}", 'clip_eps')
        if self.kl_coef < 0:
            raise ConfigError("must be >= 0", 'kl_coef')
        if self.learning_rate < 0:
            raise ConfigError("must be >= 0", 'learning_rate')
        if self.acceptance_ratio < 0:
            raise ConfigError("must be >= 0", 'acceptance_ratio')
        if self.rollout_workers < 0:
            raise ConfigError("must be >= 0", 'rollout_workers')
        if self.proposer not in PROPOSER_KINDS:
            raise ConfigError(
                f"unknown proposer '{self.proposer}', expected one of {list(PROPOSER_KINDS)}",
                'proposer')
        if self.evolution_stage not in EVOLUTION_STAGES:
            raise ConfigError(
                f"unknown stage '{self.evolution_stage}', expected one of {list(EVOLUTION_STAGES)}",
                'evolution_stage')
        mixture = self.dataset.depth_mixture
        if len(mixture) != 3 or any(p < 0 for p in mixture) or abs(sum(mixture) - 1.0) > 1e-9:
            raise ConfigError(
                f"must hold three non-negative shares summing to 1, got {mixture}",
                'dataset.depth_mixture')
        if self.dataset.train_questions < 1:
            raise ConfigError("must be >= 1", 'dataset.train_questions')
        if self.dataset.eval_questions < 0 or self.dataset.noise_facts < 1:
            raise ConfigError("must be non-negative (noise_facts >= 1)", 'dataset')
        for kind in self.generator.superior_kinds:
            if kind not in PROPOSER_KINDS:
                raise ConfigError(f"unknown proposer '{kind}'", 'generator.superior_kinds')
        if self.generator.max_retries < 1:
            raise ConfigError("must be >= 1", 'generator.max_retries')
        return self

    @property
    def evolution_events(self) -> int:
        """Number of steps t < T_e with t mod K_e == 0"""
        if self.evolve_horizon <= 0:
            return 0
        return (self.evolve_horizon - 1) // self.evolve_period + 1

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        """Build from an already validated nested dictionary (e.g. a checkpoint's config.json)"""
        values = dict(data)
        dataset = DatasetConfig(**values.pop('dataset', {}))
        generator = GeneratorConfig(**values.pop('generator', {}))
        return cls(dataset=dataset, generator=generator, **values)
