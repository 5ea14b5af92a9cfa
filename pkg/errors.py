# errors.py
"""Exception hierarchy shared by every package in the repo.

The CLI maps these onto exit codes (see ``ugnn_cli.EXIT_CODES``).
"""
from __future__ import annotations


class UGNNError(Exception):
    """Base class for all errors raised on purpose by this project."""


class StructuralError(UGNNError, ValueError):
    """Shapes, dimensions or symmetry do not line up."""


class DegenerateGraphError(StructuralError):
    """The shift operator carries no edges at all."""


class ArgumentError(UGNNError, ValueError):
    """A scalar argument lies outside its admissible range."""


class ContractViolation(UGNNError, RuntimeError):
    """An API was used against its contract (unknown op, non-scalar loss, ...)."""


class DataError(UGNNError, ValueError):
    """Input data is malformed or violates a domain constraint."""


class NumericError(UGNNError, ArithmeticError):
    """A NaN or an infinity showed up in a computation."""


class TrainingDiverged(NumericError):
    """Training loss exploded; ``snapshot`` points at the diagnostic checkpoint."""

    def __init__(self, message: str, snapshot: str | None = None):
        super().__init__(message)
        self.snapshot = snapshot


class ConfigError(UGNNError, ValueError):
    """Configuration file is missing, malformed or holds unknown keys."""
