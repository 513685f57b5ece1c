import itertools
import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import qmc

from mixbo.benchmarks import (
    BsVariant,
    UnknownBenchmark,
    all_variants,
    benchmark_names,
    brute_force_optimum,
    bs_raw,
    get_benchmark,
    load_dust,
    sobol_points,
)
from mixbo.benchmarks.dust import DustBenchmark, DustTableError
from mixbo.benchmarks.sobol import SobolError, seed_skip
from mixbo.benchmarks.truth import BudgetError
from mixbo.space import ParameterSpec, SearchSpace

STAR = -3.38763191
# frozen from an 11 x 11 enumeration of the fully integer 2D variant
GOLDEN_2D_II = (0.5118259122062803, (2, 2))


def bs_oracle(x):
    """Straight transcription of the formula, one coordinate at a time."""
    d = len(x)
    s = 0.0
    for j, v in enumerate(x, start=1):
        s += 0.15 * v**4 - 3 * v**2 + 3 * v
        if j % 2 == 1:
            s += 0.5 * (v + 3.38763191) ** 2
    return s / (2 * d) + 12.4180436


# -- Butternut Squash ----------------------------------------------------------------

def test_bs_origin():
    hand = (0.5 * 3.38763191**2) / 4 + 12.4180436
    assert bs_raw([0.0, 0.0]) == pytest.approx(hand, abs=1e-12)
    assert bs_raw([0.0, 0.0]) == pytest.approx(13.85254, abs=1e-4)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 6])
def test_bs_continuous_minimum_is_zero(d):
    assert bs_raw(np.full(d, STAR)) == pytest.approx(0.0, abs=1e-5)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=6))
def test_bs_matches_oracle(x):
    assert bs_raw(x) == pytest.approx(bs_oracle(x), rel=1e-12, abs=1e-12)


def test_bs_2d_integer_golden():
    best = min((bs_oracle([a - 5, b - 5]), (a, b)) for a in range(11) for b in range(11))
    assert best[0] == pytest.approx(GOLDEN_2D_II[0], abs=1e-12)
    assert best[1] == GOLDEN_2D_II[1]
    opt = get_benchmark("bs_2d_ii").truth()
    assert opt.candidate == GOLDEN_2D_II[1]
    assert opt.value == pytest.approx(GOLDEN_2D_II[0], abs=1e-12)


def test_variant_grid_and_budgets():
    variants = all_variants()
    assert len(variants) == 20 == len({v.name for v in variants})
    expected = {2: (5, 35), 3: (10, 80), 4: (20, 100), 5: (40, 160), 6: (60, 220)}
    for v in variants:
        assert v.budget == expected[v.dim]
        assert len(v.pattern) == v.dim


@pytest.mark.parametrize("dim,family,pattern", [
    (2, "ci", "ci"), (4, "ci", "ccii"), (5, "ci", "cciii"), (5, "id", "iiddd"),
    (3, "ii", "iii"), (6, "dd", "dddddd"),
])
def test_patterns(dim, family, pattern):
    assert BsVariant(dim, family).pattern == pattern


def test_variant_levels():
    sp = BsVariant(3, "id").space
    assert sp.params[0].levels == tuple(range(11))
    assert sp.params[2].levels == (0, 1, 3, 4, 7, 9)


@settings(max_examples=60)
@given(st.sampled_from(all_variants()), st.integers(0, 2**31))
def test_encode_decode_invariance(variant, s):
    rng = np.random.default_rng(s)
    cand = variant.space.denormalize(variant.space.from_unit(rng.random((1, variant.dim)))[0])
    raw = [float(v) if c == "c" else v - 5 for c, v in zip(variant.pattern, cand)]
    assert variant(cand) == bs_raw(raw)


def test_bs_rejects_invalid_candidate():
    with pytest.raises(ValueError):
        get_benchmark("bs_2d_dd")((2, 3))


def test_lookup():
    assert get_benchmark("bs_3d_ii").name == "bs_3d_ii"
    assert len(benchmark_names()) == 22
    for bad in ("bs_7d_ii", "bs_2d_xx", "dust3"):
        with pytest.raises(UnknownBenchmark):
            get_benchmark(bad)


def test_truth_of_continuous_variant():
    opt = get_benchmark("bs_2d_ci").truth()
    # the shift constant is rounded to 8 decimals, so the exact root sits ~1e-5 away
    assert opt.candidate[0] == pytest.approx(STAR, abs=1e-4)
    assert bs_raw([opt.candidate[0], -3.0]) <= bs_raw([STAR, -3.0])
    assert opt.y_min <= opt.value
    assert opt.y_max > opt.value


# -- DUST ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["dust1", "dust2"])
def test_dust_global_cell(name):
    bench = load_dust(name)
    opt = bench.truth()
    assert bench(opt.candidate) == -30.0
    lo, hi = opt.intervals[0]
    assert bench((lo, *opt.candidate[1:])) == -30.0


@pytest.mark.parametrize("name", ["dust1", "dust2"])
def test_dust_domains(name):
    sp = load_dust(name).space
    exp = {"dust1": ((5.0, 25.0), (2, 4, 7, 8)), "dust2": ((5.0, 50.0), (2, 3, 5, 6, 9, 10, 11, 12, 16, 19))}[name]
    assert sp.params[0].bounds == exp[0]
    assert sp.params[1].kind == "binary"
    assert sp.params[2].levels == exp[1]


@pytest.mark.parametrize("name", ["dust1", "dust2"])
def test_dust_plateaus_are_flat(name):
    bench = load_dust(name)
    for key, segs in bench.table["slices"].items():
        b, d = (int(t) for t in key.split(","))
        for lo, hi, v0, v1 in segs:
            if v0 == v1:
                a, c = lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)
                assert bench((a, b, d)) == bench((c, b, d)) == v0


@pytest.mark.parametrize("name", ["dust1", "dust2"])
def test_dust_grid_minimum(name):
    bench = load_dust(name)
    lo, hi = bench.space.params[0].bounds
    xs = np.round(np.arange(lo, hi + 1e-9, 0.01), 10)
    best = np.inf
    for b in (0, 1):
        for d in bench.space.params[2].levels:
            best = min(best, float(np.min(bench.slice_value(b, d, xs))))
    assert best == pytest.approx(-30.0, abs=1e-9)


@pytest.mark.parametrize("name", ["dust1", "dust2"])
def test_dust_single_global_cell(name):
    bench = load_dust(name)
    cells = [key for key, segs in bench.table["slices"].items() if min(min(s[2], s[3]) for s in segs) == -30.0]
    assert len(cells) == 1


def test_dust_is_pure():
    bench = load_dust("dust1")
    c = (12.345, 0, 4)
    assert bench(c) == bench(c)


def test_dust_table_validation():
    table = json.loads(json.dumps(load_dust("dust1").table))
    key = next(iter(table["slices"]))
    table["slices"][key][0][1] -= 0.5
    with pytest.raises(DustTableError):
        DustBenchmark(table)


# -- Sobol -----------------------------------------------------------------------------

def test_sobol_first_points():
    assert sobol_points(1, 3)[:, 0].tolist() == [0.5, 0.75, 0.25]


@pytest.mark.parametrize("dim", [1, 2, 3, 7, 16])
def test_sobol_matches_scipy(dim):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ref = qmc.Sobol(dim, scramble=False).random(257)[1:]
    assert np.array_equal(sobol_points(dim, 256), ref)


def test_sobol_skip_is_a_slice():
    assert np.array_equal(sobol_points(3, 10, skip=7), sobol_points(3, 17)[7:])
    assert seed_skip(3, 40) == 120


@given(st.integers(1, 16), st.integers(0, 64), st.integers(0, 10_000))
def test_sobol_unit_cube(dim, n, skip):
    P = sobol_points(dim, n, skip)
    assert P.shape == (n, dim)
    assert np.all((P >= 0) & (P < 1))


def test_sobol_deterministic():
    assert sobol_points(5, 40, 80).tobytes() == sobol_points(5, 40, 80).tobytes()


def test_sobol_beats_random_discrepancy():
    wins = 0
    for trial in range(10):
        P = sobol_points(2, 128, skip=seed_skip(trial, 128))
        R = np.random.default_rng(trial).random((128, 2))
        wins += qmc.discrepancy(P, method="L2-star") < qmc.discrepancy(R, method="L2-star")
    assert wins >= 9


def test_sobol_errors():
    for bad in (0, 17):
        with pytest.raises(SobolError):
            sobol_points(bad, 4)
    with pytest.raises(SobolError):
        sobol_points(2, -1)


# -- brute force ----------------------------------------------------------------------

def test_brute_force_discrete_2d():
    bench = get_benchmark("bs_2d_dd")
    opt = brute_force_optimum(bench, bench.space)
    levels = (0, 1, 3, 4, 7, 9)
    best = min((bs_oracle([a - 5, b - 5]), (a, b)) for a, b in itertools.product(levels, levels))
    assert opt.candidate == best[1]
    assert opt.value == pytest.approx(best[0], abs=1e-12)
    assert opt.y_max == pytest.approx(max(bs_oracle([a - 5, b - 5]) for a, b in itertools.product(levels, levels)))


def test_brute_force_dust1():
    bench = load_dust("dust1")
    opt = brute_force_optimum(bench, bench.space, grid_density=201)
    assert opt.value == -30.0
    assert opt.candidate[1:] == bench.truth().candidate[1:]
    lo, hi = bench.truth().intervals[0]
    assert lo <= opt.candidate[0] <= hi


def test_brute_force_continuous():
    sp = SearchSpace(tuple(ParameterSpec.continuous(f"x{j}", -5.0, 5.0) for j in range(2)))
    opt = brute_force_optimum(lambda c: bs_raw(c), sp, grid_density=41)
    assert opt.value == pytest.approx(0.0, abs=1e-6)
    assert np.allclose(opt.candidate, STAR, atol=1e-3)


def test_brute_force_budget():
    bench = get_benchmark("bs_6d_ii")
    with pytest.raises(BudgetError):
        brute_force_optimum(bench, bench.space, budget=1000)


def test_analytic_truth_agrees_with_brute_force():
    for name in ("bs_2d_ci", "bs_2d_id", "bs_3d_dd"):
        bench = get_benchmark(name)
        a, b = bench.truth(), brute_force_optimum(bench, bench.space)
        assert a.value == pytest.approx(b.value, abs=1e-9)
        assert a.y_max == pytest.approx(b.y_max, abs=1e-6)
