"""
exceptions.py - Error hierarchy shared by every layer.

Every error the toolkit raises on purpose derives from ``LiosError`` so the
CLI can map "something in the domain went wrong" to exit code 1 with a single
``except`` clause, while genuine bugs still surface as tracebacks.

Layout:
    LiosError
    ├── ConfigurationError          invalid WorldConfig / settings
    ├── WorldFormatError            malformed world file
    ├── PreconditionError           robot not where an operation needs it
    ├── UnreachableError            path_cost between disconnected cells
    ├── TrainingError               empty training corpus
    ├── EstimatorParseError         malformed estimator file (has ``line``)
    ├── EstimatorValidationError    estimator counts break an invariant
    ├── PolicyError                 bad input to the expected-cost functions
    ├── SearchExhaustedError        no unsearched container left
    ├── ScenarioInfeasibleError     world lacks a scenario's object types
    ├── EmissionError               missing find-cost entry
    ├── InternalError               guarded "cannot happen" states
    └── PddlError
        ├── PddlSyntaxError         lexical/syntactic error (``line``, ``col``)
        ├── UnsupportedRequirementError
        ├── PddlTypeError           arity / type mismatch
        ├── GroundingError
        ├── UnsolvableError
        ├── PlanTimeoutError
        └── PlanValidationError     (has ``step``)
"""

from typing import Optional


class LiosError(Exception):
    """Base class for all domain errors raised by this package."""


class ConfigurationError(LiosError):
    """A ``WorldConfig`` or settings value violates its invariants."""


class WorldFormatError(LiosError):
    """A world file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class PreconditionError(LiosError):
    """An operation was invoked in a state where its precondition fails."""


class UnreachableError(LiosError):
    """Two grid cells are not connected by any free 4-connected path."""


class TrainingError(LiosError):
    """The estimator could not be trained (e.g. the corpus is empty)."""


class EstimatorParseError(LiosError):
    """An estimator file is malformed; ``line`` is 1-based."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class EstimatorValidationError(LiosError):
    """An estimator table breaks ``positives <= total`` or ``alpha > 0``."""


class PolicyError(LiosError):
    """Invalid input to the expected-cost / step-probability functions."""


class SearchExhaustedError(LiosError):
    """Every container has already been searched."""


class ScenarioInfeasibleError(LiosError):
    """The world does not contain the object types a scenario needs."""


class EmissionError(LiosError):
    """PDDL emission is missing a find-cost entry."""


class InternalError(LiosError):
    """A state the world invariants rule out was reached anyway."""


class PddlError(LiosError):
    """Base class for parse, grounding and planning errors."""


class PddlSyntaxError(PddlError):
    """Lexical or syntactic error, located by 1-based line and column."""

    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, column {col})")


class UnsupportedRequirementError(PddlError):
    """A ``:requirements`` flag outside the supported subset."""


class PddlTypeError(PddlError):
    """An atom or term does not match its declared arity or types."""


class GroundingError(PddlError):
    """Grounding failed, e.g. a function term has no init assignment."""


class UnsolvableError(PddlError):
    """Search exhausted the reachable state space without reaching the goal."""


class PlanTimeoutError(PddlError):
    """The planner exceeded its wall-clock budget."""


class PlanValidationError(PddlError):
    """A plan step's precondition does not hold; ``step`` is 0-based."""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        super().__init__(message)
