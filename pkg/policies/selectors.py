"""Action selectors. All of them choose only among live memory entries.

Ties go to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from app_core.errors import ArgumentError, DimensionError, ExhaustedActionsError
from episode.types import AffordanceMap, FailureMemory
from numkit.rng import Rng
from numkit.tape import value_of

from .networks import base_probs, check_observation, fmp1_q, fmp2_head, fmp2_seed, fmp2_step, hidden_width
from .weights import PolicyWeights


@dataclass(frozen=True)
class PolicyState:
    trial_index: int = 0
    hidden: Optional[np.ndarray] = None
    # π₀ map of the episode observation, computed once at reset
    affordance: Optional[AffordanceMap] = None

    def advanced(self, hidden: Optional[np.ndarray] = None) -> "PolicyState":
        return replace(self, trial_index=self.trial_index + 1, hidden=self.hidden if hidden is None else hidden)


def masked_argmax(scores: np.ndarray, memory: FailureMemory) -> int:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (memory.size,):
        raise DimensionError(f"scores of shape {scores.shape} for a memory of {memory.size} actions")
    candidates = np.flatnonzero(memory.live)
    if candidates.size == 0:
        raise ExhaustedActionsError("every action has already failed")
    return int(candidates[int(np.argmax(scores[candidates]))])


def base_forward(o: np.ndarray, weights: PolicyWeights) -> AffordanceMap:
    """π₀ affordance map of one observation."""

    o = np.asarray(o, dtype=np.float64)
    if o.ndim != 1:
        raise DimensionError(f"base_forward takes one observation vector, got shape {o.shape}")
    return AffordanceMap(value_of(base_probs(o, weights.params)))


def select_random(m: FailureMemory, rng: Rng) -> int:
    candidates = m.candidates()
    if not candidates:
        raise ExhaustedActionsError("every action has already failed")
    return rng.choice(candidates)


def select_sorting(aff: AffordanceMap, m: FailureMemory) -> int:
    if aff.size != m.size:
        raise DimensionError(f"affordance covers {aff.size} actions, memory {m.size}")
    return masked_argmax(aff.values, m)


def select_lpre(aff: AffordanceMap, m: FailureMemory, t: int, rng: Rng) -> int:
    if t < 0:
        raise ArgumentError(f"trial index must be >= 0, got {t}")
    if t == 0:
        return select_sorting(aff, m)
    return select_random(m, rng)


def fmp1_scores(o: np.ndarray, m: FailureMemory, w: PolicyWeights) -> np.ndarray:
    check_observation(o, w.params)
    return value_of(fmp1_q(np.asarray(o, dtype=np.float64), m.values, w.params, w.spec))


def select_fmp1(o: np.ndarray, m: FailureMemory, w: PolicyWeights) -> int:
    if w.architecture != "fmp1":
        raise ArgumentError(f"select_fmp1 needs fmp1 weights, got {w.architecture!r}")
    return masked_argmax(fmp1_scores(o, m, w), m)


def fmp2_scores(
    o: np.ndarray, m: FailureMemory, state: PolicyState, w: PolicyWeights
) -> tuple[np.ndarray, np.ndarray]:
    """Head values and the next hidden state: seed from ``o`` at ``t = 0``, otherwise consume ``E_m(m)``."""

    if w.architecture != "fmp2":
        raise ArgumentError(f"FMP-2 scoring needs fmp2 weights, got {w.architecture!r}")
    width = hidden_width(w.params)
    hidden = np.zeros(width) if state.hidden is None else np.asarray(state.hidden, dtype=np.float64)
    if hidden.shape != (width,):
        raise DimensionError(f"hidden state of shape {hidden.shape}, cell width {width}")
    if state.trial_index == 0:
        if np.any(hidden != 0.0):
            raise ArgumentError("hidden state must be zero at episode start")
        new_hidden = value_of(fmp2_seed(np.asarray(o, dtype=np.float64), w.params, hidden))
    else:
        new_hidden = value_of(fmp2_step(m.values, hidden, w.params))
    return value_of(fmp2_head(new_hidden, w.params)), np.array(new_hidden)


def select_fmp2(o: np.ndarray, m: FailureMemory, state: PolicyState, w: PolicyWeights) -> tuple[int, PolicyState]:
    if w.architecture != "fmp2":
        raise ArgumentError(f"select_fmp2 needs fmp2 weights, got {w.architecture!r}")
    scores, new_hidden = fmp2_scores(o, m, state, w)
    return masked_argmax(scores, m), state.advanced(new_hidden)


__all__ = [
    "PolicyState",
    "base_forward",
    "fmp1_scores",
    "fmp2_scores",
    "masked_argmax",
    "select_fmp1",
    "select_fmp2",
    "select_lpre",
    "select_random",
    "select_sorting",
]
