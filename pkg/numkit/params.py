"""Named parameter bundles with a trainable/frozen partition."""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Optional

import numpy as np

from app_core.errors import ArgumentError, ConsistencyError


def as_array(values, *, name: str = "array") -> np.ndarray:
    """Copy ``values`` into a read-only C-contiguous float64 array."""

    array = np.array(values, dtype=np.float64, order="C", copy=True)
    array.setflags(write=False)
    return array


class ParamSet(Mapping[str, np.ndarray]):
    """Immutable mapping ``name -> array`` plus per-name trainable flags.

    Arrays are stored read-only; updates go through :meth:`replace`, which
    returns a new set. Frozen names are rejected by :meth:`replace` unless the
    caller asks for it explicitly, so optimizers cannot touch them by accident.
    """

    def __init__(
        self,
        arrays: Mapping[str, np.ndarray],
        trainable: Optional[Mapping[str, bool]] = None,
    ) -> None:
        self._arrays: dict[str, np.ndarray] = {}
        for name, value in arrays.items():
            if name in self._arrays:
                raise ArgumentError(f"duplicate parameter name {name!r}")
            self._arrays[name] = value if _is_frozen_f64(value) else as_array(value, name=name)
        flags = dict(trainable or {})
        unknown = set(flags) - set(self._arrays)
        if unknown:
            raise ConsistencyError(f"trainable flags for unknown parameters: {sorted(unknown)}")
        self._trainable = {name: bool(flags.get(name, True)) for name in self._arrays}

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def __repr__(self) -> str:
        frozen = sum(1 for flag in self._trainable.values() if not flag)
        return f"ParamSet({len(self)} params, {frozen} frozen)"

    def is_trainable(self, name: str) -> bool:
        return self._trainable[name]

    @property
    def trainable_names(self) -> list[str]:
        return [name for name, flag in self._trainable.items() if flag]

    @property
    def frozen_names(self) -> list[str]:
        return [name for name, flag in self._trainable.items() if not flag]

    @property
    def trainable_flags(self) -> dict[str, bool]:
        return dict(self._trainable)

    def size(self) -> int:
        return int(sum(array.size for array in self._arrays.values()))

    def replace(self, updates: Mapping[str, np.ndarray], *, allow_frozen: bool = False) -> "ParamSet":
        for name in updates:
            if name not in self._arrays:
                raise ConsistencyError(f"cannot update unknown parameter {name!r}")
            if not allow_frozen and not self._trainable[name]:
                raise ConsistencyError(f"parameter {name!r} is frozen")
            if np.shape(updates[name]) != self._arrays[name].shape:
                raise ConsistencyError(
                    f"shape change for {name!r}: {self._arrays[name].shape} -> {np.shape(updates[name])}"
                )
        merged = dict(self._arrays)
        merged.update(updates)
        return ParamSet(merged, self._trainable)

    def with_trainable(self, flags: Mapping[str, bool]) -> "ParamSet":
        merged = dict(self._trainable)
        merged.update(flags)
        return ParamSet(self._arrays, merged)

    def freeze(self, names: Iterable[str]) -> "ParamSet":
        return self.with_trainable({name: False for name in names})

    def subset(self, prefix: str) -> "ParamSet":
        """Parameters whose name starts with ``prefix``."""

        picked = {name: array for name, array in self._arrays.items() if name.startswith(prefix)}
        return ParamSet(picked, {name: self._trainable[name] for name in picked})

    def merge(self, other: "ParamSet") -> "ParamSet":
        overlap = set(self._arrays) & set(other)
        if overlap:
            raise ArgumentError(f"parameter names collide: {sorted(overlap)}")
        arrays = dict(self._arrays)
        arrays.update(other.items())
        flags = dict(self._trainable)
        flags.update(other.trainable_flags)
        return ParamSet(arrays, flags)

    def copy_arrays(self) -> dict[str, np.ndarray]:
        return {name: np.array(array) for name, array in self._arrays.items()}

    def equal(self, other: "ParamSet") -> bool:
        """Bitwise equality of names, shapes and values."""

        if list(self._arrays) != list(other):
            return False
        return all(
            self._arrays[name].shape == other[name].shape
            and self._arrays[name].tobytes() == other[name].tobytes()
            for name in self._arrays
        )


def _is_frozen_f64(value) -> bool:
    return (
        isinstance(value, np.ndarray)
        and value.dtype == np.float64
        and not value.flags.writeable
        and value.flags.c_contiguous
    )


__all__ = ["ParamSet", "as_array"]
