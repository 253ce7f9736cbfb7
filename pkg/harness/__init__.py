"""Command-line front end: datasets, training, evaluation, sweeps and plots."""

__all__ = ["cli", "plots"]
