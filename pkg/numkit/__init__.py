"""Minimal dense-array numerics: layers, losses, optimizers, seeded streams."""

from __future__ import annotations

import numpy as np

from .gradcheck import GradCheckReport, grad_check
from .layers import affine, gru_cell, softmax
from .losses import loss
from .optim import Optimizer, OptimizerConfig, opt_step
from .params import ParamSet, as_array
from .rng import Rng
from .tape import GradientTape, Variable

# Dense float64 array, row-major.
Array = np.ndarray

__all__ = [
    "Array",
    "GradCheckReport",
    "GradientTape",
    "Optimizer",
    "OptimizerConfig",
    "ParamSet",
    "Rng",
    "Variable",
    "affine",
    "as_array",
    "grad_check",
    "gru_cell",
    "loss",
    "opt_step",
    "softmax",
]
