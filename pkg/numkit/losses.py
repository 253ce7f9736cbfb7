"""Mean-reduced regression and classification losses."""

from __future__ import annotations

from typing import Literal

import numpy as np

from app_core.errors import ArgumentError, DimensionError

from .layers import log_softmax
from .tape import ArrayLike, emit, unpack

LossKind = Literal["L1", "smooth-L1", "cross-entropy"]
LOSS_KINDS: tuple[str, ...] = ("L1", "smooth-L1", "cross-entropy")

# Huber with delta = 1
SMOOTH_L1_BETA = 1.0


def _check(pred: np.ndarray, target: np.ndarray) -> None:
    if pred.shape != target.shape:
        raise DimensionError(f"loss: prediction {pred.shape} vs target {target.shape}")
    if pred.size == 0:
        raise DimensionError("loss over an empty array")


def l1_loss(pred: ArrayLike, target) -> ArrayLike:
    pv, pvar = unpack(pred)
    tv, _ = unpack(target)
    _check(pv, tv)
    diff = pv - tv
    value = np.asarray(np.mean(np.abs(diff)))
    return emit(value, (pvar,), lambda g: (float(g) * np.sign(diff) / diff.size,))


def smooth_l1_loss(pred: ArrayLike, target) -> ArrayLike:
    """Per element ``0.5 d²`` when ``|d| < 1`` else ``|d| - 0.5``; mean-reduced."""

    pv, pvar = unpack(pred)
    tv, _ = unpack(target)
    _check(pv, tv)
    diff = pv - tv
    small = np.abs(diff) < SMOOTH_L1_BETA
    per_element = np.where(small, 0.5 * diff * diff / SMOOTH_L1_BETA, np.abs(diff) - 0.5 * SMOOTH_L1_BETA)
    value = np.asarray(np.mean(per_element))
    slope = np.where(small, diff / SMOOTH_L1_BETA, np.sign(diff))
    return emit(value, (pvar,), lambda g: (float(g) * slope / diff.size,))


def cross_entropy_loss(logits: ArrayLike, target) -> ArrayLike:
    """Soft-target cross-entropy ``-Σ t log softmax(logits)``, averaged over rows."""

    lv, _ = unpack(logits)
    tv, _ = unpack(target)
    _check(lv, tv)
    log_probs = log_softmax(logits)
    lp, lpvar = unpack(log_probs)
    rows = 1 if lv.ndim == 1 else int(np.prod(lv.shape[:-1]))
    value = np.asarray(-np.sum(tv * lp) / rows)
    return emit(value, (lpvar,), lambda g: (-float(g) * tv / rows,))


def loss(kind: str, pred: ArrayLike, target) -> ArrayLike:
    """Dispatch on ``kind``; cross-entropy expects logits as ``pred``."""

    if kind == "L1":
        return l1_loss(pred, target)
    if kind == "smooth-L1":
        return smooth_l1_loss(pred, target)
    if kind == "cross-entropy":
        return cross_entropy_loss(pred, target)
    raise ArgumentError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")


__all__ = ["LOSS_KINDS", "LossKind", "cross_entropy_loss", "l1_loss", "loss", "smooth_l1_loss"]
