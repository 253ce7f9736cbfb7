"""Exception hierarchy shared by every package of the project."""

from __future__ import annotations


class FailureAwareError(Exception):
    """Base class for all errors raised by this project."""


class DimensionError(FailureAwareError, ValueError):
    """Array shapes do not conform."""


class ConsistencyError(FailureAwareError):
    """Parameters, gradients or optimizer state disagree with each other."""


class SamplePointError(FailureAwareError):
    """A gradient-check sample point produced a non-finite loss."""


class KinkSampleError(SamplePointError):
    """A gradient-check sample point sits inside the finite-difference stencil of a ReLU kink."""


class ArgumentError(FailureAwareError, ValueError):
    """An argument is outside its documented domain."""


class ExhaustedActionsError(FailureAwareError):
    """Every action has already failed; nothing is left to select."""


class ProtocolViolationError(FailureAwareError):
    """A policy returned an out-of-range or already-failed action."""


class GenerationError(FailureAwareError):
    """A task generator could not build a valid instance."""


class ContractError(FailureAwareError):
    """A training-time contract (binary rewards, live next-state) was broken."""


class ConfigError(FailureAwareError):
    """A run configuration is malformed or names unknown keys."""


class DependencyError(FailureAwareError):
    """A required upstream artifact (dataset, checkpoint) is missing."""


class CompatibilityError(DependencyError):
    """An artifact does not fit the task it is used with."""


class CheckpointError(FailureAwareError):
    """A checkpoint file is truncated, corrupt, or of another format version."""


class StorageError(FailureAwareError, OSError):
    """Writing or reading an artifact failed."""


__all__ = [
    "ArgumentError",
    "CheckpointError",
    "CompatibilityError",
    "ConfigError",
    "ConsistencyError",
    "ContractError",
    "DependencyError",
    "DimensionError",
    "ExhaustedActionsError",
    "FailureAwareError",
    "GenerationError",
    "KinkSampleError",
    "ProtocolViolationError",
    "SamplePointError",
    "StorageError",
]
