"""Finite-difference check of tape gradients."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from app_core.errors import ConsistencyError, KinkSampleError, SamplePointError

from .params import ParamSet
from .rng import Rng
from .tape import ArrayLike, GradientTape, Variable, value_of

logger = logging.getLogger(__name__)

ScalarFn = Callable[[Mapping[str, ArrayLike]], ArrayLike]


@dataclass
class GradCheckReport:
    """Per-parameter maximum relative error between tape and central differences."""

    max_rel_error: dict[str, float]
    tol: float
    samples: int
    worst: Optional[tuple[str, int]] = None
    details: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(err < self.tol for err in self.max_rel_error.values())

    @property
    def max_error(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)


def relative_error(analytic: float, numeric: float, floor: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _scalar(out: ArrayLike) -> float:
    value = value_of(out)
    if value.size != 1:
        raise ConsistencyError(f"grad_check function must return a scalar, got shape {value.shape}")
    result = float(value.reshape(()))
    if not math.isfinite(result):
        raise SamplePointError(f"non-finite loss {result} at a sample point")
    return result


def grad_check(
    fn: ScalarFn,
    params: ParamSet,
    h: float = 1e-5,
    tol: float = 1e-6,
    *,
    samples: Optional[int] = None,
    rng: Optional[Rng] = None,
    floor: float = 1e-4,
    kink_margin: Optional[float] = None,
) -> GradCheckReport:
    """Compare tape gradients of ``fn`` against central differences.

    ``fn`` receives a mapping ``name -> array or Variable`` and returns a scalar.
    With ``samples`` set, that many scalar coordinates are drawn uniformly (with
    replacement) from all parameters using ``rng``; otherwise every coordinate is
    checked. A check whose ReLU pre-activations come within ``kink_margin``
    (default ``10 * h``) of zero is rejected with :class:`KinkSampleError`.
    """

    tape = GradientTape()
    view = tape.watch_params(params, include_frozen=True)
    out = fn(view)
    if not isinstance(out, Variable):
        raise ConsistencyError("grad_check function does not depend on any parameter")
    _scalar(out)
    margin = 10.0 * h if kink_margin is None else kink_margin
    if tape.kink_distance <= margin:
        raise KinkSampleError(
            f"ReLU pre-activation {tape.kink_distance:.3g} lies within {margin:.3g} of the kink"
        )
    analytic = tape.gradient(out, view)

    coordinates: list[tuple[str, int]] = []
    if samples is None:
        for name in params:
            coordinates.extend((name, index) for index in range(params[name].size))
    else:
        rng = rng or Rng(0)
        names = list(params)
        offsets = np.cumsum([0] + [params[name].size for name in names])
        total = int(offsets[-1])
        for _ in range(samples):
            flat = rng.integers(total)
            slot = int(np.searchsorted(offsets, flat, side="right")) - 1
            coordinates.append((names[slot], flat - int(offsets[slot])))

    arrays = params.copy_arrays()
    errors = {name: 0.0 for name in params}
    counts = {name: 0 for name in params}
    worst: Optional[tuple[str, int]] = None
    worst_err = -1.0
    for name, index in coordinates:
        flat = arrays[name].reshape(-1)
        original = flat[index]
        flat[index] = original + h
        plus = _scalar(fn(arrays))
        flat[index] = original - h
        minus = _scalar(fn(arrays))
        flat[index] = original
        numeric = (plus - minus) / (2.0 * h)
        err = relative_error(float(analytic[name].reshape(-1)[index]), numeric, floor)
        counts[name] += 1
        if err > errors[name]:
            errors[name] = err
        if err > worst_err:
            worst_err, worst = err, (name, index)

    checked = {name: err for name, err in errors.items() if counts[name]}
    report = GradCheckReport(max_rel_error=checked, tol=tol, samples=len(coordinates), worst=worst, details=counts)
    logger.debug("grad_check: %d samples, max rel err %.3g (tol %.1g)", report.samples, report.max_error, tol)
    return report


__all__ = ["GradCheckReport", "grad_check", "relative_error"]
