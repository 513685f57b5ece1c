"""Convergence checks, composite scores and rank tables."""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from ..benchmarks.truth import Optimum
from ..space import SearchSpace

LEVELS = ("strict", "medium", "loose")

# (y_pct, x_pct) in percent, keyed by benchmark tolerance key
_TOLERANCES = {
    "bs": ((0.1, 1.0), (0.5, 2.0), (1.0, 4.0)),
    "dust1": ((0.5, 0.5), (2.0, 2.0), (3.0, 3.0)),
    "dust2": ((0.5, 0.5), (1.0, 1.0), (5.0, 5.0)),
}


class RankError(ValueError):
    pass


@dataclass(frozen=True)
class ToleranceSpec:
    level: str
    y_pct: float
    x_pct: float

    @classmethod
    def for_benchmark(cls, key: str, level: str) -> "ToleranceSpec":
        if level not in LEVELS:
            raise ValueError(f"unknown tolerance level {level!r}; expected one of {LEVELS}")
        if key not in _TOLERANCES:
            raise ValueError(f"no tolerance table for {key!r}")
        y, x = _TOLERANCES[key][LEVELS.index(level)]
        return cls(level, y / 100.0, x / 100.0)


def satisfies(candidate, y: float, tol: ToleranceSpec, truth: Optimum, space: SearchSpace) -> bool:
    """Whether one sample lies within tolerance of the optimum (all bounds inclusive)."""
    if abs(y - truth.value) > tol.y_pct * truth.y_range:
        return False
    for i, p in enumerate(space.params):
        v = candidate[i]
        if p.kind == "continuous":
            lo, hi = truth.intervals.get(i, (truth.candidate[i], truth.candidate[i]))
            gap = max(lo - v, v - hi, 0.0)
            if gap > tol.x_pct * (p.bounds[1] - p.bounds[0]):
                return False
        elif v != truth.candidate[i]:
            return False
    return True


def check_convergence(trace, tol: ToleranceSpec, truth: Optimum, space: SearchSpace):
    """First iteration at which the best sample so far is within tolerance, else None.

    Initial-design rows carry iterations <= 0 and all report as iteration 0.
    """
    best = None
    for rec in trace.records:
        if best is None or rec.y < best.y:
            best = rec
        if satisfies(best.candidate, best.y, tol, truth, space):
            return max(0, rec.iter)
    return None


@dataclass(frozen=True)
class CompositeScore:
    converged: int
    total: int
    mean_iteration: float | None
    score: float

    def to_dict(self) -> dict:
        return {"converged": self.converged, "total": self.total,
                "mean_iteration": self.mean_iteration, "score": self.score}


def composite_score(iterations) -> CompositeScore:
    """Score from per-run convergence iterations (None for runs that never converged).

    Converged iterations below 1 count as 1 so the mean stays positive.
    """
    iterations = list(iterations)
    if not iterations:
        raise ValueError("composite score needs at least one run")
    hits = [max(1, int(i)) for i in iterations if i is not None]
    n = len(iterations)
    if not hits:
        return CompositeScore(0, n, None, 0.0)
    mu = sum(hits) / len(hits)
    return CompositeScore(len(hits), n, mu, len(hits) / (n * mu))


def score_from_summary(converged: int, mean_iteration: float, total: int) -> float:
    """Score from a (C, mean iteration, N) summary whose mean was rounded to two decimals.

    The mean of integer iterations is a multiple of 1/C, so the exact sum is recovered first.
    """
    if converged == 0:
        return 0.0
    total_iters = round(mean_iteration * converged)
    return converged / (total * total_iters / converged)


@dataclass
class RankRow:
    model: str
    ranks: dict
    mean: float
    median: float
    min: int
    max: int

    @property
    def num_ranks(self) -> int:
        return len(self.ranks)

    def to_dict(self) -> dict:
        return {"model": self.model, "ranks": dict(sorted(self.ranks.items())), "mean_rank": self.mean,
                "median_rank": self.median, "min_rank": self.min, "max_rank": self.max,
                "num_ranks": self.num_ranks}


def dense_ranks(scores: dict) -> dict:
    """Rank 1 for the highest score; equal scores share a rank and the next one follows on."""
    distinct = sorted(set(scores.values()), reverse=True)
    pos = {s: k + 1 for k, s in enumerate(distinct)}
    return {m: pos[s] for m, s in sorted(scores.items())}


def rank_models(scores: dict, partial: bool = False) -> list[RankRow]:
    """Rank table from ``{model: {variant: score}}``.

    Every model must cover the same variants unless ``partial`` is set, in which
    case each variant ranks only the models that ran it. Rows are ordered by mean
    rank, then model name.
    """
    variant_sets = {m: frozenset(v) for m, v in scores.items()}
    if len(set(variant_sets.values())) > 1 and not partial:
        raise RankError("models cover different variant sets; pass partial=True for a partial ranking")
    variants = sorted(set().union(*variant_sets.values())) if variant_sets else []
    per_model = {m: {} for m in scores}
    for v in variants:
        present = {m: s[v] for m, s in scores.items() if v in s}
        for m, r in dense_ranks(present).items():
            per_model[m][v] = r
    rows = []
    for m, ranks in per_model.items():
        vals = list(ranks.values())
        if not vals:
            rows.append(RankRow(m, ranks, math.nan, math.nan, 0, 0))
            continue
        rows.append(RankRow(m, ranks, statistics.fmean(vals), float(statistics.median(vals)), min(vals), max(vals)))
    rows.sort(key=lambda r: (r.mean, r.model))
    return rows
