"""SGD with momentum and Adam, both with decoupled weight decay.

Decay is applied to the weights themselves, ``w <- w - lr * wd * w``, before the
gradient update and never folded into the gradient. Frozen parameters are
skipped entirely and come out bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Mapping, Optional

import numpy as np

from app_core.errors import ArgumentError, ConsistencyError

from .params import ParamSet

OptimizerKind = Literal["sgd-momentum", "adam"]


@dataclass(frozen=True)
class OptimizerConfig:
    kind: OptimizerKind = "adam"
    lr: float = 1e-4
    weight_decay: float = 0.0
    momentum: float = 0.9
    betas: tuple[float, float] = (0.9, 0.99)
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.kind not in ("sgd-momentum", "adam"):
            raise ArgumentError(f"unknown optimizer kind {self.kind!r}")
        if self.lr < 0 or self.weight_decay < 0:
            raise ArgumentError("learning rate and weight decay must be non-negative")
        beta1, beta2 = self.betas
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ArgumentError(f"adam betas must lie in [0, 1), got {self.betas}")


class Optimizer:
    """Stateful optimizer over a :class:`ParamSet`; :meth:`step` returns a new set."""

    def __init__(self, config: OptimizerConfig) -> None:
        self.config = config
        self.steps = 0
        self._first: dict[str, np.ndarray] = {}
        self._second: dict[str, np.ndarray] = {}

    def step(self, params: ParamSet, grads: Mapping[str, np.ndarray]) -> ParamSet:
        missing = [name for name in params.trainable_names if name not in grads]
        if missing:
            raise ConsistencyError(f"missing gradients for trainable parameters: {missing}")
        for name, grad in grads.items():
            if name in params and np.shape(grad) != params[name].shape:
                raise ConsistencyError(f"gradient for {name!r} has shape {np.shape(grad)}, expected {params[name].shape}")

        self.steps += 1
        updates: dict[str, np.ndarray] = {}
        for name in params.trainable_names:
            weight = np.array(params[name])
            if self.config.weight_decay:
                weight = weight - self.config.lr * self.config.weight_decay * weight
            grad = np.asarray(grads[name], dtype=np.float64)
            if self.config.kind == "sgd-momentum":
                weight = weight - self.config.lr * self._sgd_direction(name, grad)
            else:
                weight = weight - self.config.lr * self._adam_direction(name, grad)
            updates[name] = weight
        return params.replace(updates)

    def _sgd_direction(self, name: str, grad: np.ndarray) -> np.ndarray:
        velocity = self._first.get(name)
        velocity = grad.copy() if velocity is None else self.config.momentum * velocity + grad
        self._first[name] = velocity
        return velocity

    def _adam_direction(self, name: str, grad: np.ndarray) -> np.ndarray:
        beta1, beta2 = self.config.betas
        m = self._first.get(name, np.zeros_like(grad))
        v = self._second.get(name, np.zeros_like(grad))
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        self._first[name] = m
        self._second[name] = v
        m_hat = m / (1.0 - beta1**self.steps)
        v_hat = v / (1.0 - beta2**self.steps)
        return m_hat / (np.sqrt(v_hat) + self.config.eps)


def opt_step(
    optimizer: Optimizer,
    params: ParamSet,
    grads: Mapping[str, np.ndarray],
    config: Optional[OptimizerConfig] = None,
) -> ParamSet:
    """Functional form of :meth:`Optimizer.step`."""

    if config is not None and config != optimizer.config:
        raise ConsistencyError("optimizer state was built for a different configuration")
    return optimizer.step(params, grads)


__all__ = ["Optimizer", "OptimizerConfig", "OptimizerKind", "opt_step"]
