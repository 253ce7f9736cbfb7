"""Task configurations, validated by pydantic and shared with run files."""

from __future__ import annotations

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field

from app_core.errors import ArgumentError


class _TaskModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ClassifyConfig(_TaskModel):
    kind: Literal["classify"] = "classify"
    classes: int = 20
    feature_dim: int = 20
    separation: float = 4.0
    noise: float = 1.0
    # orientation of the class means comes from this seed, never from the instance stream
    means_seed: int = 0

    def validate_ranges(self) -> None:
        if self.classes < 2:
            raise ArgumentError(f"classify needs at least 2 classes, got {self.classes}")
        if self.feature_dim < 1:
            raise ArgumentError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.classes > self.feature_dim + 1:
            raise ArgumentError(
                f"{self.classes} equidistant class means need feature_dim >= {self.classes - 1}, got {self.feature_dim}"
            )
        if self.separation < 0 or self.noise < 0:
            raise ArgumentError("separation and noise must be non-negative")

    @property
    def action_count(self) -> int:
        return self.classes


class CorrelatedConfig(_TaskModel):
    kind: Literal["correlated"] = "correlated"
    actions: int = 25
    correlation_length: float = 0.0
    feasible_fraction: float = 0.3
    noise: float = 0.5
    base_cost: float = 50.0
    distance_penalty: float = 10.0
    # softmax temperature of the behavior-cloning target over -cost
    target_temperature: float = 10.0
    max_attempts: int = 1000

    def validate_ranges(self) -> None:
        if self.actions < 2:
            raise ArgumentError(f"correlated task needs at least 2 actions, got {self.actions}")
        if self.correlation_length < 0:
            raise ArgumentError(f"correlation_length must be >= 0, got {self.correlation_length}")
        if not 0.0 < self.feasible_fraction < 1.0:
            raise ArgumentError(f"feasible_fraction must lie in (0, 1), got {self.feasible_fraction}")
        if self.noise < 0 or self.base_cost <= 0 or self.distance_penalty < 0:
            raise ArgumentError("noise and distance_penalty must be >= 0 and base_cost > 0")
        if self.target_temperature <= 0:
            raise ArgumentError("target_temperature must be positive")

    @property
    def action_count(self) -> int:
        return self.actions


class LocalizeConfig(_TaskModel):
    kind: Literal["localize"] = "localize"
    height: int = 32
    width: int = 32
    beams: int = 16
    range_noise: float = 0.0
    k: int = 5
    num_maps: int = 4
    map_seed: int = 0
    interior_walls: int = 3
    door_width: int = 3
    obstacles: int = 6
    random_heading: bool = False
    max_attempts: int = 100

    def validate_ranges(self) -> None:
        if self.height < 8 or self.width < 8:
            raise ArgumentError(f"map must be at least 8x8, got {self.height}x{self.width}")
        if self.beams < 4:
            raise ArgumentError(f"need at least 4 beams, got {self.beams}")
        if self.range_noise < 0:
            raise ArgumentError("range_noise must be non-negative")
        if self.k < 1 or self.k % 2 == 0:
            raise ArgumentError(f"neighbourhood size k must be odd and positive, got {self.k}")
        if self.num_maps < 1:
            raise ArgumentError(f"num_maps must be >= 1, got {self.num_maps}")
        if self.interior_walls < 0 or self.obstacles < 0 or self.door_width < 1:
            raise ArgumentError("interior_walls/obstacles must be >= 0 and door_width >= 1")

    @property
    def action_count(self) -> int:
        return self.height * self.width

    @property
    def grid_shape(self) -> tuple[int, int]:
        return (self.height, self.width)


TaskConfig = Annotated[
    Union[ClassifyConfig, CorrelatedConfig, LocalizeConfig],
    Field(discriminator="kind"),
]
TASK_KINDS: tuple[str, ...] = ("classify", "correlated", "localize")


def task_config_for(kind: str, **overrides) -> Union[ClassifyConfig, CorrelatedConfig, LocalizeConfig]:
    models = {"classify": ClassifyConfig, "correlated": CorrelatedConfig, "localize": LocalizeConfig}
    try:
        model = models[kind]
    except KeyError:
        raise ArgumentError(f"unknown task kind {kind!r}; expected one of {TASK_KINDS}") from None
    return model(**overrides)


__all__ = [
    "ClassifyConfig",
    "CorrelatedConfig",
    "LocalizeConfig",
    "TASK_KINDS",
    "TaskConfig",
    "task_config_for",
]
