from .errors import (
    CoEvolutionError, StructuralError, UnknownCandidateError, CandidateParseError,
    GeneratorUnavailableError, NumericError, ConfigError
)
from .run_config import RunConfig, DatasetConfig, GeneratorConfig, PROPOSER_KINDS
from .config_loader import ConfigLoader, parse_override_args
from .rng_streams import RngStreams, derive_seed
from .logging_config import setup_logging
