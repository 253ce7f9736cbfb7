"""Reverse-mode gradient tape over float64 numpy arrays.

Operations in :mod:`numkit.layers` record ``(output, parents, backward)``
entries on the tape of any :class:`Variable` they receive; plain arrays are
treated as constants. :meth:`GradientTape.gradient` replays the entries in
reverse order. A tape belongs to one worker and is discarded after use.
"""

from __future__ import annotations

import math
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from app_core.errors import ArgumentError, ConsistencyError, DimensionError

from .params import ParamSet

Backward = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Variable:
    """An array whose gradient the owning tape can compute."""

    __slots__ = ("value", "tape", "name")

    def __init__(self, value: np.ndarray, tape: "GradientTape", name: Optional[str] = None) -> None:
        self.value = value
        self.tape = tape
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<Variable{label} shape={self.value.shape}>"


ArrayLike = Union[np.ndarray, Variable]


class GradientTape:
    def __init__(self) -> None:
        self._records: list[tuple[Variable, tuple[Optional[Variable], ...], Backward]] = []
        # smallest |pre-activation| seen by a ReLU, for kink-aware samples
        self.kink_distance = math.inf

    def __enter__(self) -> "GradientTape":
        return self

    def __exit__(self, *exc) -> None:
        return None

    def __len__(self) -> int:
        return len(self._records)

    def watch(self, value, name: Optional[str] = None) -> Variable:
        return Variable(np.asarray(value, dtype=np.float64), self, name)

    def watch_params(self, params: ParamSet, *, include_frozen: bool = False) -> dict[str, ArrayLike]:
        """Variables for trainable parameters, plain arrays for frozen ones."""

        view: dict[str, ArrayLike] = {}
        for name in params:
            if include_frozen or params.is_trainable(name):
                view[name] = self.watch(params[name], name)
            else:
                view[name] = params[name]
        return view

    def record(self, value: np.ndarray, parents: Sequence[Optional[Variable]], backward: Backward) -> Variable:
        out = Variable(value, self)
        self._records.append((out, tuple(parents), backward))
        return out

    def note_kink(self, pre_activation: np.ndarray) -> None:
        if pre_activation.size:
            self.kink_distance = min(self.kink_distance, float(np.min(np.abs(pre_activation))))

    def gradient(
        self,
        target: Variable,
        sources: Mapping[str, ArrayLike],
        seed: Optional[np.ndarray] = None,
    ) -> dict[str, np.ndarray]:
        """Gradients of ``target`` with respect to every Variable in ``sources``.

        ``target`` must be a scalar unless ``seed`` (the upstream gradient) is
        given. Sources the target does not depend on get zero gradients.
        """

        if not isinstance(target, Variable) or target.tape is not self:
            raise ConsistencyError("gradient target was not recorded on this tape")
        if seed is None:
            if target.value.size != 1:
                raise DimensionError(f"gradient target must be scalar, got shape {target.value.shape}")
            seed = np.ones_like(target.value)
        grads: dict[int, np.ndarray] = {id(target): np.asarray(seed, dtype=np.float64)}
        for out, parents, backward in reversed(self._records):
            upstream = grads.pop(id(out), None)
            if upstream is None:
                continue
            contributions = backward(upstream)
            for parent, contribution in zip(parents, contributions):
                if parent is None or contribution is None:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + contribution
                else:
                    grads[key] = contribution

        result: dict[str, np.ndarray] = {}
        for name, source in sources.items():
            if not isinstance(source, Variable):
                continue
            if source.tape is not self:
                raise ArgumentError(f"source {name!r} belongs to another tape")
            grad = grads.get(id(source))
            result[name] = np.zeros_like(source.value) if grad is None else grad
        return result


def unpack(x: ArrayLike) -> tuple[np.ndarray, Optional[Variable]]:
    if isinstance(x, Variable):
        return x.value, x
    return np.asarray(x, dtype=np.float64), None


def tape_of(parents: Sequence[Optional[Variable]]) -> Optional[GradientTape]:
    tape: Optional[GradientTape] = None
    for parent in parents:
        if parent is None:
            continue
        if tape is None:
            tape = parent.tape
        elif parent.tape is not tape:
            raise ConsistencyError("operands were recorded on different tapes")
    return tape


def emit(value: np.ndarray, parents: Sequence[Optional[Variable]], backward: Backward) -> ArrayLike:
    """Record ``value`` when any parent is a Variable; otherwise return it as-is."""

    tape = tape_of(parents)
    if tape is None:
        return value
    return tape.record(value, parents, backward)


def value_of(x: ArrayLike) -> np.ndarray:
    return x.value if isinstance(x, Variable) else np.asarray(x, dtype=np.float64)


__all__ = ["ArrayLike", "GradientTape", "Variable", "emit", "tape_of", "unpack", "value_of"]
