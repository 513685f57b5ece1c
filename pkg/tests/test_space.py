import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixbo.benchmarks import benchmark_names, get_benchmark
from mixbo.space import ParameterSpec, SearchSpace, SnapError, SpaceError

from conftest import mixed_space

DISCRETE = (0, 1, 3, 4, 7, 9)


def test_continuous_lower_bound_normalizes_to_zero():
    sp = SearchSpace((ParameterSpec.continuous("x", -5, 5),))
    assert sp.normalize((-5.0,))[0] == 0.0


def test_discrete_level_normalizes_by_first_and_last_level():
    sp = SearchSpace((ParameterSpec.discrete("d", DISCRETE),))
    expected = (3 - 0) / (9 - 0)
    assert sp.normalize((3,))[0] == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.33333333, abs=1e-8)


def test_integer_upper_bound_normalizes_to_one():
    sp = SearchSpace((ParameterSpec.integer("n", 0, 10),))
    assert sp.normalize((10,))[0] == 1.0


def test_invalid_value_names_the_dimension():
    sp = SearchSpace((ParameterSpec.discrete("depth", DISCRETE),))
    with pytest.raises(SpaceError, match="depth"):
        sp.normalize((2,))


def test_denormalize_continuous_lower_bound():
    sp = SearchSpace((ParameterSpec.continuous("x", 5, 25),))
    assert sp.denormalize([0.0]) == (5.0,)


def test_denormalize_inverts_discrete_normalization():
    sp = SearchSpace((ParameterSpec.discrete("d", DISCRETE),))
    assert sp.denormalize([3 / 9]) == (3,)


def test_denormalize_rejects_off_anchor_ordinals():
    sp = SearchSpace((ParameterSpec.integer("n", 0, 10),))
    with pytest.raises(SnapError):
        sp.denormalize([0.55])


def test_round_trip_on_random_anchor_points(rng):
    sp = mixed_space()
    pts = sp.from_unit(rng.random((100, sp.dim)))
    cont = sp.continuous_idx
    other = [i for i in range(sp.dim) if i not in cont]
    for p in pts:
        back = sp.normalize(sp.denormalize(p))
        assert np.array_equal(back[other], p[other])
        assert np.allclose(back[cont], p[cont], rtol=0, atol=1e-12)


def test_binary_is_integer_with_two_levels():
    b = ParameterSpec.binary("b")
    assert b.levels == (0.0, 1.0)
    with pytest.raises(SpaceError):
        ParameterSpec("b", "binary", levels=(0, 2))


@pytest.mark.parametrize("bad", [
    lambda: ParameterSpec.discrete("d", (1,)),
    lambda: ParameterSpec.discrete("d", (1, 3, 2)),
    lambda: ParameterSpec("n", "integer", levels=(0, 2, 3)),
    lambda: ParameterSpec.categorical("c", ("a",)),
    lambda: ParameterSpec.continuous("x", 1, 1),
])
def test_invalid_parameter_specs(bad):
    with pytest.raises(SpaceError):
        bad()


def test_duplicate_names_rejected():
    with pytest.raises(SpaceError):
        SearchSpace((ParameterSpec.binary("a"), ParameterSpec.binary("a")))


def test_two_binaries_enumerate_to_four():
    sp = SearchSpace((ParameterSpec.binary("a"), ParameterSpec.binary("b")))
    assert sp.enumerate_support() == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_discrete_by_integer_support_has_66_points():
    sp = SearchSpace((ParameterSpec.discrete("d", DISCRETE), ParameterSpec.integer("n", 0, 10)))
    support = sp.enumerate_support()
    assert len(support) == 6 * 11 == 66
    assert support == sorted(support)


def test_categorical_support_in_category_order():
    sp = SearchSpace((ParameterSpec.categorical("c", "abcd"),))
    assert sp.enumerate_support() == [(0,), (1,), (2,), (3,)]


def test_enumeration_errors():
    with pytest.raises(SpaceError):
        SearchSpace((ParameterSpec.continuous("x", 0, 1),)).enumerate_support()
    sp = SearchSpace((ParameterSpec.integer("n", 0, 10), ParameterSpec.integer("m", 0, 10)))
    with pytest.raises(SpaceError):
        sp.enumerate_support(cap=100)


def test_distance_identity_and_full_range():
    sp = SearchSpace((ParameterSpec.continuous("x", 0, 10),))
    assert sp.distance((3.0,), (3.0,)) == 0.0
    assert sp.distance((0.0,), (10.0,)) == 1.0


def test_distance_three_four_five():
    sp = SearchSpace((ParameterSpec.continuous("x", 0, 10), ParameterSpec.continuous("y", 0, 10)))
    oracle = math.hypot(0.3, 0.4)
    assert sp.distance((0.0, 0.0), (3.0, 4.0)) == pytest.approx(oracle, abs=1e-15)
    assert oracle == pytest.approx(0.5, abs=1e-15)


def test_categorical_mismatch_adds_one():
    sp = SearchSpace((ParameterSpec.categorical("c", "abc"), ParameterSpec.categorical("e", "xy")))
    assert sp.distance((0, 0), (2, 1)) == pytest.approx(math.sqrt(2))


# -- properties ---------------------------------------------------------------

levels_strategy = st.lists(st.integers(-50, 50), min_size=2, max_size=8, unique=True).map(sorted)


@given(levels_strategy)
def test_normalize_is_monotone_in_level_order(levels):
    sp = SearchSpace((ParameterSpec.discrete("d", levels),))
    vals = [sp.normalize((v,))[0] for v in levels]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[0] == 0.0 and vals[-1] == 1.0


@pytest.mark.parametrize("name", benchmark_names())
def test_round_trip_on_every_benchmark_anchor(name):
    sp = get_benchmark(name).space
    for i, p in enumerate(sp.params):
        if p.kind == "continuous":
            continue
        for a, v in zip(p.anchors, p.levels):
            point = np.zeros(sp.dim)
            point[i] = a
            cand = sp.denormalize(point)
            assert cand[i] == v
            assert sp.normalize(cand)[i] == a


@given(st.lists(st.integers(1, 5), min_size=1, max_size=4))
def test_support_size_is_product_of_level_counts(counts):
    sp = SearchSpace(tuple(ParameterSpec.integer(f"n{j}", 0, c) for j, c in enumerate(counts)))
    assert len(sp.enumerate_support()) == math.prod(c + 1 for c in counts) == sp.support_size()


unit = st.floats(0, 1, allow_nan=False)


@settings(max_examples=200)
@given(st.tuples(*[st.tuples(unit, unit, st.integers(0, 2))] * 3))
def test_distance_is_a_metric(triple):
    sp = SearchSpace((ParameterSpec.continuous("x", 0, 1), ParameterSpec.continuous("y", 0, 1),
                      ParameterSpec.categorical("c", "abc")))
    a, b, c = (np.array(t, dtype=float) for t in triple)
    d = sp.normalized_distance
    assert d(a, a) == 0.0
    assert d(a, b) == d(b, a)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-12
