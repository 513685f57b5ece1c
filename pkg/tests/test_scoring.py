import csv
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixbo.benchmarks import get_benchmark
from mixbo.benchmarks.truth import Optimum
from mixbo.harness.loop import RunTrace, TraceRecord
from mixbo.harness.scoring import (
    LEVELS,
    RankError,
    ToleranceSpec,
    check_convergence,
    composite_score,
    dense_ranks,
    rank_models,
    satisfies,
    score_from_summary,
)
from mixbo.space import ParameterSpec, SearchSpace

DATA = Path(__file__).parent / "data"
SPACE = SearchSpace((ParameterSpec.continuous("x", -5.0, 5.0), ParameterSpec.discrete("d", (0, 1, 3))))
TRUTH = Optimum((1.0, 3), 0.0, 0.0, 100.0, {0: (1.0, 1.0)})
MEDIUM = ToleranceSpec.for_benchmark("bs", "medium")


def trace_of(rows):
    t = RunTrace(0, ["x", "d"])
    best = float("inf")
    for it, cand, y in rows:
        best = min(best, y)
        t.records.append(TraceRecord(it, cand, y, best, best, "EI"))
    return t


def published_rows():
    with open(DATA / "published_scores.csv") as fh:
        return list(csv.DictReader(fh))


# -- tolerance table ------------------------------------------------------------------

@pytest.mark.parametrize("key,expected", [
    ("bs", [(0.1, 1), (0.5, 2), (1, 4)]),
    ("dust1", [(0.5, 0.5), (2, 2), (3, 3)]),
    ("dust2", [(0.5, 0.5), (1, 1), (5, 5)]),
])
def test_tolerance_values(key, expected):
    for level, (y, x) in zip(LEVELS, expected):
        tol = ToleranceSpec.for_benchmark(key, level)
        assert tol.y_pct == pytest.approx(y / 100) and tol.x_pct == pytest.approx(x / 100)


def test_tolerance_errors():
    with pytest.raises(ValueError):
        ToleranceSpec.for_benchmark("bs", "tight")
    with pytest.raises(ValueError):
        ToleranceSpec.for_benchmark("chemistry", "loose")


# -- composite score ------------------------------------------------------------------

def test_published_rows_reproduce():
    rows = published_rows()
    assert len(rows) == 63
    for r in rows:
        C = int(r["converged"])
        mu = float(r["mean_iteration"]) if r["mean_iteration"] else None
        got = score_from_summary(C, mu, 10)
        assert got == pytest.approx(float(r["score"]), abs=1e-6), r


def test_headline_rows():
    assert score_from_summary(6, 35.83, 10) == pytest.approx(0.016744, abs=1e-6)
    assert score_from_summary(1, 8.00, 10) == pytest.approx(0.0125, abs=1e-12)


def test_no_convergence_scores_zero():
    cs = composite_score([None] * 10)
    assert (cs.converged, cs.total, cs.mean_iteration, cs.score) == (0, 10, None, 0.0)
    assert score_from_summary(0, None, 10) == 0.0


def test_single_run():
    assert composite_score([8]).score == 0.125
    assert composite_score([8] + [None] * 9).score == pytest.approx(0.0125, abs=1e-15)


def test_empty_run_list():
    with pytest.raises(ValueError):
        composite_score([])


@given(st.lists(st.one_of(st.none(), st.integers(0, 300)), min_size=1, max_size=20))
def test_score_matches_definition(its):
    hits = [max(1, i) for i in its if i is not None]
    cs = composite_score(its)
    if not hits:
        assert cs.score == 0.0
    else:
        assert cs.score == pytest.approx(len(hits) / (len(its) * (sum(hits) / len(hits))), rel=1e-12)
        assert 0 < cs.score <= 1


# -- convergence ------------------------------------------------------------------------

def test_first_point_is_optimum():
    t = trace_of([(-2, (1.0, 3), 0.0), (-1, (4.0, 0), 50.0), (0, (2.0, 1), 20.0), (1, (0.0, 0), 30.0)])
    assert check_convergence(t, MEDIUM, TRUTH, SPACE) == 0


def test_wrong_level_never_converges():
    t = trace_of([(0, (4.0, 0), 50.0), (1, (1.0, 1), 0.0), (2, (1.0, 0), 0.0)])
    assert check_convergence(t, MEDIUM, TRUTH, SPACE) is None


def test_converges_at_acquisition():
    t = trace_of([(0, (4.0, 0), 50.0), (1, (3.0, 3), 10.0), (2, (1.05, 3), 0.2)])
    assert check_convergence(t, MEDIUM, TRUTH, SPACE) == 2


def test_boundaries_are_inclusive():
    y_edge = MEDIUM.y_pct * TRUTH.y_range
    x_edge = 1.0 + MEDIUM.x_pct * 10.0
    assert satisfies((x_edge, 3), y_edge, MEDIUM, TRUTH, SPACE)
    assert not satisfies((x_edge, 3), y_edge * (1 + 1e-12), MEDIUM, TRUTH, SPACE)
    assert not satisfies((x_edge + 1e-9, 3), y_edge, MEDIUM, TRUTH, SPACE)


def test_plateau_interval_counts_as_exact():
    truth = Optimum((17.0, 1, 7), -30.0, -30.0, -1.0, {0: (15.5, 18.5)})
    bench = get_benchmark("dust1")
    tol = ToleranceSpec.for_benchmark("dust1", "strict")
    assert satisfies((15.5, 1, 7), -30.0, tol, truth, bench.space)
    assert satisfies((15.45, 1, 7), -30.0, tol, truth, bench.space)
    assert not satisfies((15.3, 1, 7), -30.0, tol, truth, bench.space)


def test_best_sample_decides():
    # a later, worse sample near the optimum must not count
    t = trace_of([(0, (4.0, 0), -5.0), (1, (1.0, 3), 0.0)])
    assert check_convergence(t, MEDIUM, TRUTH, SPACE) is None


# -- ranks -------------------------------------------------------------------------------

def test_two_models():
    rows = rank_models({"a": {"v": 0.02}, "b": {"v": 0.01}})
    assert [(r.model, r.ranks["v"]) for r in rows] == [("a", 1), ("b", 2)]


def test_ties_share_rank():
    assert dense_ranks({"a": 0.01, "b": 0.01, "c": 0.0}) == {"a": 1, "b": 1, "c": 2}


def test_three_by_two_fixture():
    scores = {"A": {"v1": 0.03, "v2": 0.01}, "B": {"v1": 0.02, "v2": 0.02}, "C": {"v1": 0.02, "v2": 0.03}}
    rows = {r.model: r for r in rank_models(scores)}
    # v1: A 1, B 2, C 2 / v2: C 1, B 2, A 3
    assert rows["A"].ranks == {"v1": 1, "v2": 3}
    assert (rows["A"].mean, rows["A"].median, rows["A"].min, rows["A"].max) == (2.0, 2.0, 1, 3)
    assert (rows["B"].mean, rows["B"].min, rows["B"].max) == (2.0, 2, 2)
    assert rows["C"].mean == 1.5
    assert [r.model for r in rank_models(scores)] == ["C", "A", "B"]


def test_mismatched_variants_need_partial_mode():
    scores = {"kr": {"v1": 0.1}, "pr": {"v1": 0.05, "v2": 0.2}}
    with pytest.raises(RankError):
        rank_models(scores)
    rows = {r.model: r for r in rank_models(scores, partial=True)}
    assert rows["kr"].num_ranks == 1 and rows["pr"].num_ranks == 2
    assert rows["pr"].ranks == {"v1": 2, "v2": 1}
