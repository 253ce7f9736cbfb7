import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from app_core.errors import ArgumentError, GenerationError
from numkit.rng import Rng
from tasks.config import ClassifyConfig, CorrelatedConfig, LocalizeConfig, task_config_for
from tasks.families import ClassifyFamily, CorrelatedFamily, LocalizeFamily, family_for
from tasks.generators import class_means, gen_classification, gen_correlated, gen_localization, map_pool
from tasks.grid import _cast, beam_directions, empty_map, neighbourhood_box, raycast
from tasks.oracle import SelfAssessment, assess, passing_mask
from tasks.types import GridMap, TaskInstance

SMALL_LOCALIZE = LocalizeConfig(height=12, width=14, beams=8, k=3, num_maps=2, interior_walls=1, obstacles=2)


def _slab_raycast(grid: GridMap, row: int, col: int, dcol: float, drow: float) -> float:
    """Reference ranges: nearest occupied box entered by the ray, by the slab method."""

    rows, cols = np.nonzero(grid.occupancy)
    x0, y0 = col + 0.5, row + 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        if dcol == 0.0:
            inside = (cols < x0) & (x0 < cols + 1)
            tx_lo = np.where(inside, -np.inf, np.inf)
            tx_hi = np.where(inside, np.inf, -np.inf)
        else:
            t1, t2 = (cols - x0) / dcol, (cols + 1 - x0) / dcol
            tx_lo, tx_hi = np.minimum(t1, t2), np.maximum(t1, t2)
        if drow == 0.0:
            inside = (rows < y0) & (y0 < rows + 1)
            ty_lo = np.where(inside, -np.inf, np.inf)
            ty_hi = np.where(inside, np.inf, -np.inf)
        else:
            t1, t2 = (rows - y0) / drow, (rows + 1 - y0) / drow
            ty_lo, ty_hi = np.minimum(t1, t2), np.maximum(t1, t2)
    enter = np.maximum(tx_lo, ty_lo)
    leave = np.minimum(tx_hi, ty_hi)
    hit = (enter <= leave) & (leave > 0)
    first = np.argmin(np.where(hit, enter, np.inf))
    return math.hypot(rows[first] - row, cols[first] - col)


# ----------------------------------------------------------------------
# Classification
# ----------------------------------------------------------------------
def test_classification_is_seeded():
    config = ClassifyConfig()
    a = gen_classification(config, Rng(5))
    b = gen_classification(config, Rng(5))
    assert a.truth == b.truth
    np.testing.assert_array_equal(a.observation, b.observation)
    assert a.action_count == config.classes


def test_class_means_sit_at_the_separation():
    config = ClassifyConfig(classes=6, feature_dim=8, separation=4.0)
    means = class_means(config)
    for i in range(6):
        for j in range(i + 1, 6):
            assert np.linalg.norm(means[i] - means[j]) == pytest.approx(4.0)


@pytest.mark.parametrize("config", [ClassifyConfig(), ClassifyConfig(classes=9, feature_dim=8, separation=2.5)])
def test_class_means_form_a_regular_simplex(config):
    means = class_means(config)
    assert means.shape == (config.classes, config.feature_dim)
    gaps = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=-1)
    off_diagonal = gaps[~np.eye(config.classes, dtype=bool)]
    np.testing.assert_allclose(off_diagonal, config.separation, rtol=1e-9)


def test_too_many_classes_for_the_feature_dim():
    with pytest.raises(ArgumentError):
        class_means(ClassifyConfig(classes=10, feature_dim=8))
    with pytest.raises(ArgumentError):
        ClassifyFamily(ClassifyConfig(classes=20, feature_dim=16))


def test_zero_separation_carries_no_label_information():
    np.testing.assert_array_equal(class_means(ClassifyConfig(separation=0.0)), 0.0)


def test_large_separation_is_nearest_mean_separable():
    config = ClassifyConfig(classes=8, feature_dim=16, separation=10.0, noise=1.0)
    means = class_means(config)
    family = ClassifyFamily(config)
    hits = 0
    for instance in family.instances(1000, seed=3):
        guess = int(np.argmin(np.linalg.norm(means - instance.observation, axis=1)))
        hits += guess == instance.truth.label
    assert hits / 1000 >= 0.95


def test_invalid_configs():
    with pytest.raises(ArgumentError):
        ClassifyFamily(ClassifyConfig(classes=1))
    with pytest.raises(ArgumentError):
        CorrelatedFamily(CorrelatedConfig(feasible_fraction=1.0))
    with pytest.raises(ArgumentError):
        LocalizeFamily(LocalizeConfig(height=6))
    with pytest.raises(ArgumentError):
        LocalizeFamily(LocalizeConfig(k=4))
    with pytest.raises(ArgumentError):
        task_config_for("juggle")


# ----------------------------------------------------------------------
# Correlated feasibility
# ----------------------------------------------------------------------
def _neighbour_correlation(length: float, count: int = 2000) -> float:
    config = CorrelatedConfig(correlation_length=length)
    left, right = [], []
    rng = Rng(31)
    for i in range(count):
        feasible = gen_correlated(config, rng.fork(i)).truth.feasible.astype(np.float64)
        left.append(feasible)
        right.append(np.roll(feasible, -1))
    return float(np.corrcoef(np.concatenate(left), np.concatenate(right))[0, 1])


def test_independent_feasibility_has_no_neighbour_correlation():
    assert abs(_neighbour_correlation(0.0)) < 0.03


def test_correlation_length_raises_neighbour_correlation():
    assert _neighbour_correlation(5.0, count=500) > _neighbour_correlation(0.0, count=500) + 0.2


def test_every_correlated_instance_has_a_feasible_action():
    config = CorrelatedConfig(feasible_fraction=0.05, correlation_length=3.0)
    for instance in CorrelatedFamily(config).instances(300, seed=1):
        assert instance.truth.feasible.any()


def test_correlated_pass_iff_finite_cost():
    family = CorrelatedFamily(CorrelatedConfig())
    for instance in family.instances(20, seed=2):
        for action in range(instance.action_count):
            outcome = assess(instance, action)
            assert outcome.passed == math.isfinite(outcome.cost)
            if not outcome.passed:
                assert outcome.cost == math.inf


def test_correlated_bc_target_is_a_distribution_on_feasible_actions():
    family = CorrelatedFamily(CorrelatedConfig())
    instance = family.generate(Rng(4))
    target = family.bc_target(instance)
    assert target.sum() == pytest.approx(1.0)
    assert np.all(target[~instance.truth.feasible] < 1e-12)


# ----------------------------------------------------------------------
# Localization
# ----------------------------------------------------------------------
def test_empty_map_ranges_are_wall_distances():
    grid = empty_map(10, 12)
    ranges = raycast(grid, 5, 6, 0.0, 4)
    np.testing.assert_allclose(ranges, [5.0, 4.0, 6.0, 5.0])


def test_beam_toward_adjacent_wall_has_range_one():
    grid = empty_map(8, 8)
    ranges = raycast(grid, 1, 3, 0.0, 4)
    assert ranges[3] == 1.0


def test_raycast_rejects_occupied_pose():
    with pytest.raises(ArgumentError):
        raycast(empty_map(8, 8), 0, 0, 0.0, 4)


def test_rotating_map_and_heading_keeps_ranges():
    grid = map_pool(SMALL_LOCALIZE)[0]
    rotated = GridMap(np.rot90(grid.occupancy))
    width = grid.width
    for row, col in grid.free_cells()[::7]:
        original = raycast(grid, row, col, 0.0, 16)
        turned = raycast(rotated, width - 1 - col, row, -math.pi / 2, 16)
        np.testing.assert_allclose(turned, original)


def test_traversal_matches_slab_reference():
    config = LocalizeConfig(num_maps=3)
    pool = map_pool(config)
    rng = Rng(12)
    directions = [
        (dc, dr) for dc, dr in beam_directions(0.0, config.beams) if not math.isclose(abs(dc), abs(dr))
    ]
    for _ in range(1000):
        grid = pool[rng.integers(len(pool))]
        free = grid.free_cells()
        row, col = free[rng.integers(len(free))]
        for dc, dr in directions:
            assert _cast(grid, row, col, dc, dr) == pytest.approx(_slab_raycast(grid, row, col, dc, dr))


def test_localization_truth_is_free_and_seeded():
    family = LocalizeFamily(SMALL_LOCALIZE)
    for instance in family.instances(50, seed=6):
        assert instance.grid.is_free(instance.truth.row, instance.truth.col)
        assert instance.observation.shape == (family.observation_dim,)
    a = gen_localization(SMALL_LOCALIZE, Rng(3))
    b = gen_localization(SMALL_LOCALIZE, Rng(3))
    np.testing.assert_array_equal(a.observation, b.observation)
    np.testing.assert_array_equal(a.scan, b.scan)
    assert a.truth == b.truth


def test_map_boundary_must_be_closed():
    occupancy = np.array(empty_map(8, 8).occupancy)
    occupancy[0, 3] = False
    with pytest.raises(GenerationError):
        GridMap(occupancy)


def test_localize_k1_passes_only_the_exact_cell():
    family = LocalizeFamily(SMALL_LOCALIZE.model_copy(update={"k": 1}))
    instance = family.generate(Rng(8))
    truth = instance.truth
    exact = truth.row * SMALL_LOCALIZE.width + truth.col
    outcomes = [assess(instance, a, k=1).passed for a in range(instance.action_count)]
    assert outcomes.count(True) == 1
    assert outcomes[exact]


def test_localize_passing_count_is_clipped_box():
    family = LocalizeFamily(SMALL_LOCALIZE.model_copy(update={"k": 5}))
    for instance in family.instances(40, seed=9):
        rows, cols = neighbourhood_box(instance.truth.row, instance.truth.col, 5, instance.grid_shape)
        expected = (rows.stop - rows.start) * (cols.stop - cols.start)
        mask = passing_mask(instance, 5)
        assert mask.sum() == expected
        assert [assess(instance, a, 5).passed for a in range(instance.action_count)] == mask.tolist()


def test_even_k_is_rejected():
    instance = LocalizeFamily(SMALL_LOCALIZE).generate(Rng(0))
    with pytest.raises(ArgumentError):
        assess(instance, 0, k=4)
    with pytest.raises(ArgumentError):
        SelfAssessment(k=2)


def test_classify_oracle_and_call_counter():
    instance = gen_classification(ClassifyConfig(classes=5, feature_dim=4), Rng(1))
    oracle = SelfAssessment()
    assert oracle(instance, instance.truth.label).passed
    assert not oracle(instance, (instance.truth.label + 1) % 5).passed
    assert oracle.calls == 2
    with pytest.raises(ArgumentError):
        assess(instance, 5)


def test_call_counter_under_worker_threads():
    instance = gen_classification(ClassifyConfig(classes=5, feature_dim=4), Rng(2))
    oracle = SelfAssessment()

    def burst(offset):
        for action in range(2000):
            oracle(instance, (action + offset) % 5)

    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(burst, range(8)))
    assert oracle.calls == 16000


def test_localize_record_keeps_map_and_truth():
    family = family_for(SMALL_LOCALIZE)
    instance = family.generate(Rng(2), instance_id=4)
    restored = family.from_record(family.to_record(instance))
    assert isinstance(restored, TaskInstance)
    assert restored.truth == instance.truth
    np.testing.assert_array_equal(restored.grid.occupancy, instance.grid.occupancy)
    np.testing.assert_array_equal(restored.observation, instance.observation)
    assert restored.instance_id == 4
