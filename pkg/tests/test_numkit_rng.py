import numpy as np
import pytest

from app_core.errors import ArgumentError
from numkit.params import ParamSet
from numkit.rng import Rng, splitmix64


def test_splitmix64_reference_value():
    _, out = splitmix64(0)
    assert out == 0xE220A8397B1DCDAF


def test_same_seed_same_stream():
    a, b = Rng(42), Rng(42)
    assert [a.next_u64() for _ in range(50)] == [b.next_u64() for _ in range(50)]


def test_different_seeds_differ():
    assert [Rng(1).next_u64() for _ in range(4)] != [Rng(2).next_u64() for _ in range(4)]


def test_fork_ignores_parent_consumption():
    fresh = Rng(9)
    used = Rng(9)
    for _ in range(100):
        used.next_u64()
    assert fresh.fork("eval").next_u64() == used.fork("eval").next_u64()
    assert fresh.fork(3).next_u64() == used.fork(3).next_u64()


def test_fork_keys_are_distinct_streams():
    rng = Rng(5)
    draws = {rng.fork(key).next_u64() for key in ("a", "b", 0, 1, 2)}
    assert len(draws) == 5


def test_uniform_range_and_integers_bounds():
    rng = Rng(0)
    values = [rng.uniform() for _ in range(2000)]
    assert min(values) >= 0.0 and max(values) < 1.0
    ints = [rng.integers(7) for _ in range(2000)]
    assert set(ints) == set(range(7))


def test_integers_rejects_empty_range():
    with pytest.raises(ArgumentError):
        Rng(0).integers(0)


def test_negative_seed_rejected():
    with pytest.raises(ArgumentError):
        Rng(-1)


def test_permutation_is_a_permutation():
    perm = Rng(11).permutation(30)
    assert sorted(perm) == list(range(30))


def test_choice_over_empty_set():
    with pytest.raises(ArgumentError):
        Rng(0).choice([])


def test_normal_array_moments():
    sample = Rng(123).normal_array(20000)
    assert sample.shape == (20000,)
    assert abs(sample.mean()) < 0.05
    assert abs(sample.std() - 1.0) < 0.05


def test_normal_array_is_reproducible():
    np.testing.assert_array_equal(Rng(4).normal_array((3, 5)), Rng(4).normal_array((3, 5)))


def test_param_set_is_read_only_and_rejects_frozen_updates():
    params = ParamSet({"w": np.zeros(3), "b": np.ones(2)}, {"b": False})
    with pytest.raises(ValueError):
        params["w"][0] = 1.0
    updated = params.replace({"w": np.full(3, 2.0)})
    assert updated["w"].tolist() == [2.0, 2.0, 2.0]
    assert params["w"].tolist() == [0.0, 0.0, 0.0]
    from app_core.errors import ConsistencyError

    with pytest.raises(ConsistencyError):
        params.replace({"b": np.zeros(2)})


def test_param_set_merge_collision():
    a = ParamSet({"x": np.zeros(1)})
    with pytest.raises(ArgumentError):
        a.merge(ParamSet({"x": np.ones(1)}))


def test_param_set_subset_and_equal():
    params = ParamSet({"enc.w": np.eye(2), "enc.b": np.zeros(2), "dec.w": np.ones((1, 2))})
    assert list(params.subset("enc.")) == ["enc.w", "enc.b"]
    assert params.equal(ParamSet(params.copy_arrays()))
    assert not params.equal(params.replace({"dec.w": np.zeros((1, 2))}))
