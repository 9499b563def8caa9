"""
Error hierarchy for the co-evolution engine
Every failure raised by the packages derives from CoEvolutionError so callers can
catch the whole family, while the builtin bases keep ordinary except clauses working.
"""

from typing import Optional


class CoEvolutionError(Exception):
    """Base class for all engine errors"""


class StructuralError(CoEvolutionError, ValueError):
    """Raised when an operation is called on data with the wrong shape or state"""


class UnknownCandidateError(CoEvolutionError, KeyError):
    """Raised when an instruction id is not part of the population"""

    def __init__(self, candidate_id):
        self.candidate_id = candidate_id
        super().__init__(f"Instruction candidate {candidate_id!r} is not in the population")

    def __str__(self) -> str:
        return self.args[0]


class CandidateParseError(CoEvolutionError, ValueError):
    """Raised when a generator response holds no well-formed candidate"""


class GeneratorUnavailableError(CoEvolutionError, RuntimeError):
    """Raised when the text generator could not be reached after all retries"""


class NumericError(CoEvolutionError, ArithmeticError):
    """Raised when a computation produced a non-finite value"""


class ConfigError(CoEvolutionError, ValueError):
    """Raised for invalid configuration; key_path names the offending entry"""

    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        super().__init__(message if key_path is None else f"{key_path}: {message}")
