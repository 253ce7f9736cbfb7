"""Evaluation fan-out over policies, task configurations and seeds."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from app_core.errors import ArgumentError
from episode.engine import run_episode
from episode.types import EpisodeConfig, EpisodeTrace
from numkit.rng import Rng
from tasks.families import TaskFamily
from tasks.types import TaskInstance

from .metrics import MetricsReport, compute_metrics

logger = logging.getLogger(__name__)

EVAL_STREAM = "eval"


@dataclass(frozen=True)
class SuiteCell:
    """One task configuration of the grid, labelled for the report."""

    label: str
    family: TaskFamily
    config_hash: str = ""
    # fixed instances (e.g. from a dataset file) instead of fresh draws
    instances: Optional[tuple[TaskInstance, ...]] = None


def evaluation_instances(family: TaskFamily, episodes: int, seed: int) -> list[TaskInstance]:
    return list(family.instances(episodes, seed, stream=EVAL_STREAM))


def evaluate_policy(
    policy,
    family: TaskFamily,
    instances: Sequence[TaskInstance],
    cfg: EpisodeConfig,
    seed: int,
    *,
    threads: int = 1,
) -> list[EpisodeTrace]:
    """One episode per instance; episode ``i`` draws from ``Rng(seed).fork("episode").fork(i)``."""

    if policy.action_count != family.action_count:
        raise ArgumentError(
            f"policy {policy.name!r} covers {policy.action_count} actions, task has {family.action_count}"
        )
    oracle = family.oracle()
    streams = Rng(seed).fork("episode")

    def one(item: tuple[int, TaskInstance]) -> EpisodeTrace:
        index, instance = item
        return run_episode(policy, instance, oracle, cfg, streams.fork(index))

    items = list(enumerate(instances))
    if threads <= 1:
        return [one(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, items))


def max_trials_curve(
    policy,
    family: TaskFamily,
    instances: Sequence[TaskInstance],
    cfg: EpisodeConfig,
    seed: int,
) -> list[MetricsReport]:
    """Reports at trial budgets ``1..cfg.max_trials`` over the same instances."""

    reports = []
    for budget in range(1, cfg.max_trials + 1):
        budget_cfg = EpisodeConfig(max_trials=budget, memory_mode=cfg.memory_mode, memory_radius=cfg.memory_radius)
        traces = evaluate_policy(policy, family, instances, budget_cfg, seed)
        reports.append(compute_metrics(traces, has_cost=family.has_cost, policy=policy.name, seed=seed))
    return reports


def run_suite(
    policies: Mapping[str, object],
    cells: Sequence[SuiteCell],
    episodes: int,
    seeds: Sequence[int],
    cfg: EpisodeConfig,
    *,
    threads: int = 1,
) -> list[MetricsReport]:
    """One report per (policy, cell, seed), in that nesting order."""

    if episodes < 1 and not any(cell.instances for cell in cells):
        raise ArgumentError(f"episodes must be >= 1, got {episodes}")
    if not seeds:
        raise ArgumentError("run_suite needs at least one seed")
    for name, policy in policies.items():
        for cell in cells:
            if policy.action_count != cell.family.action_count:
                raise ArgumentError(
                    f"policy {name} covers {policy.action_count} actions, task {cell.label} has {cell.family.action_count}"
                )

    reports: list[MetricsReport] = []
    for name, policy in policies.items():
        for cell in cells:
            for seed in seeds:
                instances = cell.instances or evaluation_instances(cell.family, episodes, seed)
                traces = evaluate_policy(policy, cell.family, instances, cfg, seed, threads=threads)
                report = compute_metrics(
                    traces,
                    has_cost=cell.family.has_cost,
                    policy=name,
                    task=cell.label,
                    config_hash=cell.config_hash,
                    seed=seed,
                )
                logger.info(
                    "%s on %s seed %d: tsr=%.4f tns=%s", name, cell.label, seed, report.tsr, report.tns
                )
                reports.append(report)
    return reports


__all__ = [
    "EVAL_STREAM",
    "SuiteCell",
    "evaluate_policy",
    "evaluation_instances",
    "max_trials_curve",
    "run_suite",
]
