"""Self-assessment rules: deterministic pass/fail (and cost) for an action."""

from __future__ import annotations

import logging
import math
import threading
from typing import Optional

import numpy as np

from app_core.errors import ArgumentError
from episode.types import AssessmentOutcome

from .grid import neighbourhood_box
from .types import ClassifyTruth, CorrelatedTruth, LocalizeTruth, TaskInstance

logger = logging.getLogger(__name__)


def _check_action(instance: TaskInstance, action: int) -> int:
    index = int(action)
    if index != action or not 0 <= index < instance.action_count:
        raise ArgumentError(f"action {action!r} outside [0, {instance.action_count})")
    return index


def assess(instance: TaskInstance, action: int, k: Optional[int] = None) -> AssessmentOutcome:
    """Pass/fail of ``action`` on ``instance``; ``k`` is the localization box width."""

    index = _check_action(instance, action)
    truth = instance.truth
    if isinstance(truth, ClassifyTruth):
        return AssessmentOutcome(passed=index == truth.label)
    if isinstance(truth, CorrelatedTruth):
        cost = truth.costs.cost(index)
        return AssessmentOutcome(passed=math.isfinite(cost), cost=cost)
    if isinstance(truth, LocalizeTruth):
        if k is None:
            raise ArgumentError("localization assessment needs the neighbourhood size k")
        if k < 1 or k % 2 == 0:
            raise ArgumentError(f"neighbourhood size k must be odd and positive, got {k}")
        width = instance.grid_shape[1]
        row, col = divmod(index, width)
        half = k // 2
        return AssessmentOutcome(passed=abs(row - truth.row) <= half and abs(col - truth.col) <= half)
    raise ArgumentError(f"no assessment rule for truth of type {type(truth).__name__}")


def passing_mask(instance: TaskInstance, k: Optional[int] = None) -> np.ndarray:
    """Boolean mask of every passing action, without calling :func:`assess` per action."""

    truth = instance.truth
    if isinstance(truth, ClassifyTruth):
        mask = np.zeros(instance.action_count, dtype=bool)
        mask[truth.label] = True
        return mask
    if isinstance(truth, CorrelatedTruth):
        return truth.feasible.copy()
    if isinstance(truth, LocalizeTruth):
        if k is None or k < 1 or k % 2 == 0:
            raise ArgumentError(f"neighbourhood size k must be odd and positive, got {k}")
        mask = np.zeros(instance.grid_shape, dtype=bool)
        mask[neighbourhood_box(truth.row, truth.col, k, instance.grid_shape)] = True
        return mask.reshape(-1)
    raise ArgumentError(f"no assessment rule for truth of type {type(truth).__name__}")


class SelfAssessment:
    """Callable oracle bound to a task's assessment settings."""

    def __init__(self, k: Optional[int] = None) -> None:
        if k is not None and (k < 1 or k % 2 == 0):
            raise ArgumentError(f"neighbourhood size k must be odd and positive, got {k}")
        self.k = k
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, instance: TaskInstance, action: int) -> AssessmentOutcome:
        # shared by evaluation worker threads
        with self._lock:
            self.calls += 1
        outcome = assess(instance, action, self.k)
        logger.debug("assess instance=%s action=%d -> %s", instance.instance_id, action, outcome.passed)
        return outcome


__all__ = ["SelfAssessment", "assess", "passing_mask"]
