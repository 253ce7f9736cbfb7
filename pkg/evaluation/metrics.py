"""Task success rate, trial number and planning-cost metrics."""

from __future__ import annotations

import math
from typing import Any, Iterable, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from app_core.errors import ArgumentError
from episode.types import EpisodeTrace

Z_95 = 1.96

CSV_COLUMNS: tuple[str, ...] = (
    "policy",
    "task",
    "config-hash",
    "seed",
    "episodes",
    "tsr",
    "tsr_ci_lo",
    "tsr_ci_hi",
    "tns",
    "pc_recip",
)


def wilson_interval(successes: int, total: int, z: float = Z_95) -> tuple[float, float]:
    if total <= 0:
        raise ArgumentError("Wilson interval over zero samples")
    p = successes / total
    denom = 1.0 + z * z / total
    centre = (p + z * z / (2.0 * total)) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + z * z / (4.0 * total * total)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


class MetricsReport(BaseModel):
    """Metrics of one (policy, task config, seed) cell, or a pool of cells."""

    model_config = ConfigDict(extra="forbid")

    policy: str = ""
    task: str = ""
    config_hash: str = ""
    seed: Optional[int] = None
    episodes: int
    successes: int
    tsr: float
    tsr_ci: tuple[float, float]
    # undefined (None) when no episode succeeded
    tns: Optional[float] = None
    tns_ci: Optional[tuple[float, float]] = None
    # None for tasks without a cost
    pc_recip: Optional[float] = None
    trials_sum: int = 0
    trials_sq_sum: int = 0
    pc_sum: Optional[float] = None
    per_seed: list["MetricsReport"] = Field(default_factory=list)

    def labelled(self, **labels: Any) -> "MetricsReport":
        return self.model_copy(update=labels)

    def to_row(self) -> dict[str, Any]:
        return {
            "policy": self.policy,
            "task": self.task,
            "config-hash": self.config_hash,
            "seed": self.seed,
            "episodes": self.episodes,
            "tsr": self.tsr,
            "tsr_ci_lo": self.tsr_ci[0],
            "tsr_ci_hi": self.tsr_ci[1],
            "tns": self.tns,
            "pc_recip": self.pc_recip,
        }


MetricsReport.model_rebuild()


def _tns_stats(successes: int, trials_sum: int, trials_sq_sum: int) -> tuple[Optional[float], Optional[tuple]]:
    if successes == 0:
        return None, None
    mean = trials_sum / successes
    if successes > 1:
        variance = max(0.0, (trials_sq_sum - successes * mean * mean) / (successes - 1))
    else:
        variance = 0.0
    half = Z_95 * math.sqrt(variance / successes)
    return mean, (mean - half, mean + half)


def _report(
    episodes: int,
    successes: int,
    trials_sum: int,
    trials_sq_sum: int,
    pc_sum: Optional[float],
    **labels: Any,
) -> MetricsReport:
    tns, tns_ci = _tns_stats(successes, trials_sum, trials_sq_sum)
    return MetricsReport(
        episodes=episodes,
        successes=successes,
        tsr=successes / episodes,
        tsr_ci=wilson_interval(successes, episodes),
        tns=tns,
        tns_ci=tns_ci,
        pc_recip=None if pc_sum is None else pc_sum / episodes,
        trials_sum=trials_sum,
        trials_sq_sum=trials_sq_sum,
        pc_sum=pc_sum,
        **labels,
    )


def compute_metrics(traces: Sequence[EpisodeTrace], *, has_cost: Optional[bool] = None, **labels: Any) -> MetricsReport:
    """tsr over all traces, tns over successes, pc as the mean of 100/cost (0 for failures)."""

    if not traces:
        raise ArgumentError("compute_metrics needs at least one trace")
    if has_cost is None:
        has_cost = any(trace.final_cost is not None for trace in traces)
    successes = trials_sum = trials_sq_sum = 0
    pc_sum = 0.0 if has_cost else None
    for trace in traces:
        if trace.succeeded:
            successes += 1
            trials_sum += trace.trials_used
            trials_sq_sum += trace.trials_used * trace.trials_used
            if has_cost:
                cost = trace.final_cost
                if cost is not None and math.isfinite(cost) and cost > 0:
                    pc_sum += 100.0 / cost
    return _report(len(traces), successes, trials_sum, trials_sq_sum, pc_sum, **labels)


def aggregate_reports(reports: Iterable[MetricsReport], **labels: Any) -> MetricsReport:
    """Pool per-seed reports; the pooled report keeps them under ``per_seed``."""

    reports = list(reports)
    if not reports:
        raise ArgumentError("aggregate_reports needs at least one report")
    has_cost = reports[0].pc_sum is not None
    if any((report.pc_sum is not None) != has_cost for report in reports):
        raise ArgumentError("cannot pool reports with and without costs")
    pooled = _report(
        sum(r.episodes for r in reports),
        sum(r.successes for r in reports),
        sum(r.trials_sum for r in reports),
        sum(r.trials_sq_sum for r in reports),
        sum(r.pc_sum for r in reports) if has_cost else None,
        policy=labels.pop("policy", reports[0].policy),
        task=labels.pop("task", reports[0].task),
        config_hash=labels.pop("config_hash", reports[0].config_hash),
        **labels,
    )
    return pooled.model_copy(update={"per_seed": reports})


__all__ = ["CSV_COLUMNS", "MetricsReport", "Z_95", "aggregate_reports", "compute_metrics", "wilson_interval"]
