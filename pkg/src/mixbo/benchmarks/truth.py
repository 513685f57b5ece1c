"""Ground-truth optima by exhaustive search."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ..space import SearchSpace


class BudgetError(RuntimeError):
    pass


@dataclass
class Optimum:
    """Minimizer, its value and the objective range over the domain.

    ``intervals`` maps each continuous dimension index to the raw interval of
    equally optimal values (a single point for smooth objectives).
    """

    candidate: tuple
    value: float
    y_min: float
    y_max: float
    intervals: dict = field(default_factory=dict)

    @property
    def y_range(self) -> float:
        return self.y_max - self.y_min

    def to_dict(self) -> dict:
        return {
            "candidate": list(self.candidate),
            "value": self.value,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "intervals": {str(k): list(v) for k, v in self.intervals.items()},
        }

    @classmethod
    def from_dict(cls, d) -> "Optimum":
        return cls(tuple(d["candidate"]), d["value"], d["y_min"], d["y_max"],
                   {int(k): tuple(v) for k, v in d.get("intervals", {}).items()})


def brute_force_optimum(objective, space: SearchSpace, grid_density: int = 101, budget: int = 5_000_000,
                        refine: bool = True) -> Optimum:
    """Minimum over all ordinal/categorical combinations times a continuous grid.

    The best grid point is then polished on the continuous dimensions with a
    bounded local search. ``objective`` takes a raw candidate tuple.
    """
    cont = [int(i) for i in space.continuous_idx]
    other = [i for i in range(space.dim) if i not in cont]
    axes = []
    for i in other:
        p = space.params[i]
        axes.append(list(range(p.n_levels)) if p.kind == "categorical" else [_lv(v) for v in p.levels])
    grid = [np.linspace(*space.params[i].bounds, grid_density) for i in cont]
    n_total = math.prod(len(a) for a in axes) * grid_density ** len(cont)
    if n_total > budget:
        raise BudgetError(f"{n_total} evaluations exceed the budget of {budget}")
    best_v, best_c = math.inf, None
    worst = -math.inf
    hits = []
    for combo in itertools.product(*axes):
        for xs in itertools.product(*grid):
            cand = [None] * space.dim
            for i, v in zip(other, combo):
                cand[i] = v
            for i, v in zip(cont, xs):
                cand[i] = float(v)
            cand = tuple(cand)
            y = float(objective(cand))
            worst = max(worst, y)
            if y < best_v - 1e-12:
                best_v, best_c, hits = y, cand, [cand]
            elif abs(y - best_v) <= 1e-12:
                hits.append(cand)
    if refine and cont:
        lo = [space.params[i].bounds[0] for i in cont]
        hi = [space.params[i].bounds[1] for i in cont]

        def f(u):
            c = list(best_c)
            for i, v in zip(cont, u):
                c[i] = float(v)
            return objective(tuple(c))

        res = optimize.minimize(f, [best_c[i] for i in cont], method="L-BFGS-B", bounds=list(zip(lo, hi)))
        if res.fun < best_v:
            c = list(best_c)
            for i, v in zip(cont, res.x):
                c[i] = float(v)
            best_c, best_v = tuple(c), float(res.fun)
            hits = [best_c]
    same = [h for h in hits if all(h[i] == best_c[i] for i in other)]
    intervals = {i: (min(h[i] for h in same), max(h[i] for h in same)) for i in cont}
    return Optimum(best_c, best_v, best_v, worst, intervals)


def _lv(v):
    return int(v) if float(v).is_integer() else float(v)
