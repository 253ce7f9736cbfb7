"""Logging utilities for training and evaluation runs."""

from .run_logger import RunLogger

__all__ = [
    "RunLogger",
]
