"""Behavior cloning of π₀ on supervision targets."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from app_core.errors import ArgumentError, DimensionError
from logs.run_logger import RunLogger
from numkit.layers import softmax
from numkit.losses import loss as loss_fn
from numkit.optim import Optimizer
from numkit.rng import Rng
from numkit.tape import GradientTape
from policies.networks import base_logits
from policies.weights import PolicyWeights
from tasks.families import TaskFamily

from .config import TrainConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BCDataset:
    observations: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        obs = np.asarray(self.observations, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if obs.ndim != 2 or targets.ndim != 2 or obs.shape[0] != targets.shape[0]:
            raise DimensionError(f"observations {obs.shape} and targets {targets.shape} do not pair up")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return int(self.observations.shape[0])

    @classmethod
    def from_records(cls, records: Sequence[dict[str, Any]]) -> "BCDataset":
        if not records:
            raise ArgumentError("behavior cloning needs a non-empty dataset")
        return cls(
            np.array([record["observation"] for record in records], dtype=np.float64),
            np.array([record["target"] for record in records], dtype=np.float64),
        )

    @classmethod
    def from_family(cls, family: TaskFamily, count: int, seed: int) -> "BCDataset":
        return cls.from_records([family.to_record(instance) for instance in family.instances(count, seed)])

    def take(self, indices: Iterable[int]) -> "BCDataset":
        index = np.asarray(list(indices), dtype=np.int64)
        return BCDataset(self.observations[index], self.targets[index])


@dataclass
class BCResult:
    weights: PolicyWeights
    losses: list[float] = field(default_factory=list)
    train_accuracy: Optional[float] = None
    val_accuracy: Optional[float] = None


def accuracy(weights: PolicyWeights, dataset: BCDataset) -> float:
    """Top-1 agreement between π₀ argmax and target argmax."""

    if len(dataset) == 0:
        return math.nan
    logits = base_logits(dataset.observations, weights.params)
    predicted = np.argmax(logits, axis=1)
    return float(np.mean(predicted == np.argmax(dataset.targets, axis=1)))


def split_dataset(dataset: BCDataset, fraction: float, rng: Rng) -> tuple[BCDataset, Optional[BCDataset]]:
    held_out = int(len(dataset) * fraction)
    if held_out == 0 or held_out >= len(dataset):
        return dataset, None
    order = rng.permutation(len(dataset))
    return dataset.take(order[held_out:]), dataset.take(order[:held_out])


def bc_batch_loss(params, observations: np.ndarray, targets: np.ndarray, kind: str):
    logits = base_logits(observations, params)
    if kind == "cross-entropy":
        return loss_fn(kind, logits, targets)
    return loss_fn(kind, softmax(logits), targets)


def train_bc(
    weights: PolicyWeights,
    dataset: BCDataset,
    cfg: TrainConfig,
    *,
    run_logger: Optional[RunLogger] = None,
) -> BCResult:
    """Minimize the configured loss between π₀ and the targets; returns per-epoch mean losses."""

    cfg.validate_ranges()
    if len(dataset) == 0:
        raise ArgumentError("behavior cloning needs a non-empty dataset")
    if dataset.targets.shape[1] != weights.action_count:
        raise DimensionError(f"targets cover {dataset.targets.shape[1]} actions, π₀ {weights.action_count}")

    rng = Rng(cfg.seed)
    train_set, val_set = split_dataset(dataset, cfg.validation_fraction, rng.fork("bc-split"))
    shuffle = rng.fork("bc-shuffle")
    optimizer = Optimizer(cfg.optimizer_config())
    params = weights.params
    losses: list[float] = []

    for epoch in range(cfg.epochs):
        order = shuffle.permutation(len(train_set))
        batch_losses = []
        for start in range(0, len(order), cfg.bc_batch_size):
            index = order[start : start + cfg.bc_batch_size]
            tape = GradientTape()
            view = tape.watch_params(params)
            out = bc_batch_loss(view, train_set.observations[index], train_set.targets[index], cfg.loss)
            grads = tape.gradient(out, view)
            params = optimizer.step(params, grads)
            batch_losses.append(float(out.value))
        epoch_loss = float(np.mean(batch_losses))
        losses.append(epoch_loss)
        if run_logger is not None:
            current = weights.with_params(params)
            run_logger.log_epoch(
                epoch,
                epoch_loss,
                accuracy(current, train_set),
                None if val_set is None else accuracy(current, val_set),
            )
        else:
            logger.debug("bc epoch %d loss %.6f", epoch, epoch_loss)

    trained = weights.with_params(params)
    result = BCResult(
        weights=trained,
        losses=losses,
        train_accuracy=accuracy(trained, train_set),
        val_accuracy=None if val_set is None else accuracy(trained, val_set),
    )
    logger.info(
        "behavior cloning done: %d epochs, final loss %s, train acc %.4f",
        cfg.epochs,
        losses[-1] if losses else None,
        result.train_accuracy,
    )
    return result


__all__ = ["BCDataset", "BCResult", "accuracy", "bc_batch_loss", "split_dataset", "train_bc"]
