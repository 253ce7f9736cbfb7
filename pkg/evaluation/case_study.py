"""Case studies: the decision sequence of single episodes, trial by trial.

Each trial keeps the distribution the policy held over the still-untried
actions when it chose, so a figure can show how that distribution moves
after every failure.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from app_core.errors import ArgumentError, ConsistencyError, DimensionError
from episode.engine import run_episode
from episode.state_manager import EpisodeState
from episode.types import EpisodeConfig, FailureMemory
from numkit.rng import Rng
from policies.policy import DecisionScores
from tasks.families import TaskFamily
from tasks.oracle import passing_mask
from tasks.types import TaskInstance

from .suite import evaluation_instances

logger = logging.getLogger(__name__)


def remaining_distribution(scores: DecisionScores, memory: FailureMemory) -> np.ndarray:
    """Scores as a distribution over live actions; failed actions get exactly zero.

    Probabilities are renormalized over the live set, Q values go through a
    softmax restricted to it.
    """

    values = np.asarray(scores.values, dtype=np.float64)
    if values.shape != (memory.size,):
        raise DimensionError(f"scores of shape {values.shape} for a memory of {memory.size} actions")
    live = memory.live
    if not live.any():
        raise ArgumentError("no live action left to distribute over")
    out = np.zeros(memory.size)
    if scores.kind == "probability":
        kept = np.where(live, values, 0.0)
        total = kept.sum()
        out[:] = kept / total if total > 0 else live / live.sum()
    else:
        weights = np.exp(values[live] - values[live].max())
        out[live] = weights / weights.sum()
    return out


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    action: int
    passed: bool
    cost: Optional[float]
    kind: str
    # distribution over actions at decision time
    distribution: np.ndarray
    # zero memory entries once the outcome is known
    failed: tuple[int, ...]


@dataclass(frozen=True)
class CaseStudy:
    policy: str
    episode: int
    instance_id: Optional[int]
    passing: tuple[int, ...]
    trials: tuple[TrialRecord, ...]

    @property
    def succeeded(self) -> bool:
        return bool(self.trials) and self.trials[-1].passed

    def decision_sequence(self) -> list[int]:
        return [trial.action for trial in self.trials]

    def describe(self) -> str:
        path = " -> ".join(str(action) for action in self.decision_sequence())
        return f"episode {self.episode} {self.policy}: {path} ({'pass' if self.succeeded else 'fail'})"

    def to_record(self) -> dict[str, Any]:
        return {
            "policy": self.policy,
            "episode": self.episode,
            "instance_id": self.instance_id,
            "passing": list(self.passing),
            "succeeded": self.succeeded,
            "decisions": self.decision_sequence(),
            "trials": [
                {
                    "trial": trial.trial,
                    "action": trial.action,
                    "passed": trial.passed,
                    "cost": trial.cost if trial.cost is not None and math.isfinite(trial.cost) else None,
                    "kind": trial.kind,
                    "distribution": [float(p) for p in trial.distribution],
                    "failed": list(trial.failed),
                }
                for trial in self.trials
            ],
        }


class _ScoreRecorder:
    """Delegates to ``policy`` and keeps the scores it consults before each selection."""

    def __init__(self, policy) -> None:
        self.policy = policy
        self.name = policy.name
        self.action_count = policy.action_count
        self.pending: list[tuple[DecisionScores, FailureMemory]] = []

    def reset(self, observation):
        self.pending.clear()
        return self.policy.reset(observation)

    def select(self, observation, memory, state, rng):
        self.pending.append((self.policy.decision_scores(observation, memory, state), memory))
        return self.policy.select(observation, memory, state, rng)


def trace_case(
    policy,
    family: TaskFamily,
    instance: TaskInstance,
    cfg: EpisodeConfig,
    rng: Rng,
    *,
    episode: int = 0,
) -> CaseStudy:
    """Run one episode and keep per-trial actions, outcomes and distributions."""

    oracle = family.oracle()
    recorder = _ScoreRecorder(policy)
    trials: list[TrialRecord] = []

    def on_step(state: EpisodeState) -> None:
        index = len(state["steps"]) - 1
        step = state["steps"][index]
        scores, before = recorder.pending[index]
        trials.append(
            TrialRecord(
                trial=index,
                action=step.action,
                passed=step.outcome.passed,
                cost=step.outcome.cost,
                kind=scores.kind,
                distribution=remaining_distribution(scores, before),
                failed=tuple(state["memory"].zero_indices()),
            )
        )

    trace = run_episode(recorder, instance, oracle, cfg, rng, on_step=on_step)
    if len(trials) != trace.trials_used:
        raise ConsistencyError(f"recorded {len(trials)} trials for an episode of {trace.trials_used}")
    passing = tuple(int(i) for i in np.flatnonzero(passing_mask(instance, oracle.k)))
    return CaseStudy(policy.name, episode, instance.instance_id, passing, tuple(trials))


def case_studies(
    policies: Mapping[str, Any],
    family: TaskFamily,
    episodes: Sequence[int],
    cfg: EpisodeConfig,
    seed: int,
    *,
    run_logger=None,
) -> list[CaseStudy]:
    """Evaluation episodes ``episodes`` of ``seed`` replayed for every policy, episode-major.

    Instances and per-episode streams are the ones :func:`evaluate_policy` uses,
    so a case matches the corresponding row of an evaluation run.
    """

    if not episodes:
        raise ArgumentError("case studies need at least one episode index")
    if min(episodes) < 0:
        raise ArgumentError(f"episode indices must be >= 0, got {min(episodes)}")
    instances = evaluation_instances(family, max(episodes) + 1, seed)
    streams = Rng(seed).fork("episode")

    studies = []
    for index in episodes:
        for name, policy in policies.items():
            study = trace_case(policy, family, instances[index], cfg, streams.fork(index), episode=index)
            study = dataclasses.replace(study, policy=name)
            logger.info("%s", study.describe())
            if run_logger is not None:
                run_logger.log_case_study(study.to_record())
            studies.append(study)
    return studies


__all__ = ["CaseStudy", "TrialRecord", "case_studies", "remaining_distribution", "trace_case"]
