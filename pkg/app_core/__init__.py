"""Application-level utilities: errors, environment settings, run files."""

from __future__ import annotations

__all__ = [
    "config",
    "errors",
    "run_config",
]
