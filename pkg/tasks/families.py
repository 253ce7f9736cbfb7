"""Task families: generator, oracle, supervision target and record format per task kind."""

from __future__ import annotations

import math
from typing import Any, Callable, Iterator, Optional, Union

import numpy as np

from app_core.errors import ArgumentError
from numkit.rng import Rng

from .config import ClassifyConfig, CorrelatedConfig, LocalizeConfig
from .generators import gen_classification, gen_correlated, gen_localization, map_pool
from .oracle import SelfAssessment
from .types import ClassifyTruth, CorrelatedTruth, CostTable, GridMap, LocalizeTruth, TaskInstance

# logit given to infeasible actions in the correlated supervision target
INFEASIBLE_LOGIT = -1e3


class TaskFamily:
    """Base class; subclasses bind one config type."""

    kind: str = ""

    def __init__(self, config) -> None:
        config.validate_ranges()
        self.config = config

    @property
    def action_count(self) -> int:
        return self.config.action_count

    @property
    def grid_shape(self) -> Optional[tuple[int, int]]:
        return None

    @property
    def observation_dim(self) -> int:
        raise NotImplementedError

    @property
    def has_cost(self) -> bool:
        return False

    def generate(self, rng: Rng, instance_id: Optional[int] = None) -> TaskInstance:
        raise NotImplementedError

    def oracle(self) -> SelfAssessment:
        return SelfAssessment()

    def bc_target(self, instance: TaskInstance) -> np.ndarray:
        raise NotImplementedError

    def instances(self, count: int, seed: int, *, stream: str = "instances") -> Iterator[TaskInstance]:
        """``count`` instances, instance ``i`` drawn from ``Rng(seed).fork(stream).fork(i)``."""

        base = Rng(seed).fork(stream)
        for index in range(count):
            yield self.generate(base.fork(index), instance_id=index)

    # ------------------------------------------------------------------
    # Dataset records
    # ------------------------------------------------------------------
    def to_record(self, instance: TaskInstance) -> dict[str, Any]:
        return {
            "instance_id": instance.instance_id,
            "observation": [float(v) for v in instance.observation],
            "target": [float(v) for v in self.bc_target(instance)],
            "truth": self._truth_record(instance),
        }

    def from_record(self, record: dict[str, Any]) -> TaskInstance:
        raise NotImplementedError

    def _truth_record(self, instance: TaskInstance) -> dict[str, Any]:
        raise NotImplementedError


class ClassifyFamily(TaskFamily):
    kind = "classify"

    @property
    def observation_dim(self) -> int:
        return self.config.feature_dim

    def generate(self, rng: Rng, instance_id: Optional[int] = None) -> TaskInstance:
        return gen_classification(self.config, rng, instance_id)

    def bc_target(self, instance: TaskInstance) -> np.ndarray:
        target = np.zeros(self.action_count)
        target[instance.truth.label] = 1.0
        return target

    def _truth_record(self, instance: TaskInstance) -> dict[str, Any]:
        return {"label": instance.truth.label}

    def from_record(self, record: dict[str, Any]) -> TaskInstance:
        return TaskInstance(
            kind="classify",
            observation=np.asarray(record["observation"], dtype=np.float64),
            truth=ClassifyTruth(label=int(record["truth"]["label"])),
            action_count=self.action_count,
            instance_id=record.get("instance_id"),
        )


class CorrelatedFamily(TaskFamily):
    kind = "correlated"

    @property
    def observation_dim(self) -> int:
        return self.config.actions

    @property
    def has_cost(self) -> bool:
        return True

    def generate(self, rng: Rng, instance_id: Optional[int] = None) -> TaskInstance:
        return gen_correlated(self.config, rng, instance_id)

    def bc_target(self, instance: TaskInstance) -> np.ndarray:
        costs = instance.truth.costs.costs
        logits = np.where(np.isfinite(costs), -costs / self.config.target_temperature, INFEASIBLE_LOGIT)
        shifted = np.exp(logits - logits.max())
        return shifted / shifted.sum()

    def _truth_record(self, instance: TaskInstance) -> dict[str, Any]:
        truth = instance.truth
        return {
            # infinite costs are written as null
            "costs": [float(c) if math.isfinite(c) else None for c in truth.costs.costs],
            "field": [float(v) for v in truth.field],
        }

    def from_record(self, record: dict[str, Any]) -> TaskInstance:
        costs = [math.inf if c is None else float(c) for c in record["truth"]["costs"]]
        return TaskInstance(
            kind="correlated",
            observation=np.asarray(record["observation"], dtype=np.float64),
            truth=CorrelatedTruth(costs=CostTable(np.asarray(costs)), field=np.asarray(record["truth"]["field"])),
            action_count=self.action_count,
            instance_id=record.get("instance_id"),
        )


class LocalizeFamily(TaskFamily):
    kind = "localize"

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.config.grid_shape

    @property
    def observation_dim(self) -> int:
        return self.config.height * self.config.width + self.config.beams

    def generate(self, rng: Rng, instance_id: Optional[int] = None) -> TaskInstance:
        return gen_localization(self.config, rng, instance_id)

    def oracle(self) -> SelfAssessment:
        return SelfAssessment(k=self.config.k)

    def bc_target(self, instance: TaskInstance) -> np.ndarray:
        """Normalized Gaussian blob (σ = k/3) centred on the true cell."""

        truth = instance.truth
        sigma = self.config.k / 3.0
        rows, cols = np.indices(self.grid_shape)
        blob = np.exp(-((rows - truth.row) ** 2 + (cols - truth.col) ** 2) / (2.0 * sigma * sigma))
        return (blob / blob.sum()).reshape(-1)

    def maps(self) -> tuple[GridMap, ...]:
        return map_pool(self.config)

    def _truth_record(self, instance: TaskInstance) -> dict[str, Any]:
        truth = instance.truth
        return {
            "row": truth.row,
            "col": truth.col,
            "heading": truth.heading,
            "map_index": truth.map_index,
            "map": instance.grid.to_rows(),
            "scan": [float(v) for v in instance.scan],
        }

    def from_record(self, record: dict[str, Any]) -> TaskInstance:
        truth = record["truth"]
        return TaskInstance(
            kind="localize",
            observation=np.asarray(record["observation"], dtype=np.float64),
            truth=LocalizeTruth(
                row=int(truth["row"]),
                col=int(truth["col"]),
                heading=float(truth["heading"]),
                map_index=int(truth["map_index"]),
            ),
            action_count=self.action_count,
            instance_id=record.get("instance_id"),
            grid=GridMap.from_rows(truth["map"]),
            scan=np.asarray(truth["scan"], dtype=np.float64),
        )


AnyTaskConfig = Union[ClassifyConfig, CorrelatedConfig, LocalizeConfig]

_FAMILIES: dict[str, Callable[[Any], TaskFamily]] = {
    "classify": ClassifyFamily,
    "correlated": CorrelatedFamily,
    "localize": LocalizeFamily,
}


def family_for(config: AnyTaskConfig) -> TaskFamily:
    try:
        factory = _FAMILIES[config.kind]
    except KeyError:
        raise ArgumentError(f"unknown task kind {config.kind!r}") from None
    return factory(config)


__all__ = [
    "ClassifyFamily",
    "CorrelatedFamily",
    "INFEASIBLE_LOGIT",
    "LocalizeFamily",
    "TaskFamily",
    "family_for",
]
