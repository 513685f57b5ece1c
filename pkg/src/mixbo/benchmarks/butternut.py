"""Butternut Squash: an asymmetric, range-normalized Styblinski-Tang variant.

Continuous inputs live in [-5, 5]. Ordinal inputs are encoded as levels
0..10 (integer) or a subset of them (discrete) and decoded by ``x = v - 5``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..space import ParameterSpec, SearchSpace
from .truth import Optimum

SHIFT = 3.38763191
OFFSET = 12.4180436
ENCODE_SHIFT = 5
INTEGER_LEVELS = tuple(range(11))
DISCRETE_LEVELS = (0, 1, 3, 4, 7, 9)

DIMS = (2, 3, 4, 5, 6)
FAMILIES = ("ci", "id", "ii", "dd")
BUDGETS = {2: (5, 35), 3: (10, 80), 4: (20, 100), 5: (40, 160), 6: (60, 220)}


def bs_raw(x) -> float:
    """Objective on raw coordinates; odd coordinates (1-based) carry the extra quadratic."""
    x = np.asarray(x, dtype=float)
    d = len(x)
    total = float(np.sum(0.15 * x**4 - 3.0 * x**2 + 3.0 * x))
    total += float(np.sum(0.5 * (x[0::2] + SHIFT) ** 2))
    return total / (2 * d) + OFFSET


def _term(x, odd: bool):
    x = np.asarray(x, dtype=float)
    t = 0.15 * x**4 - 3.0 * x**2 + 3.0 * x
    return t + 0.5 * (x + SHIFT) ** 2 if odd else t


def pattern_for(dim: int, family: str) -> str:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    h = dim // 2
    if family == "ci":
        return "c" * h + "i" * (dim - h)
    if family == "id":
        return "i" * h + "d" * (dim - h)
    return family[0] * dim


@dataclass(frozen=True)
class BsVariant:
    dim: int
    family: str

    def __post_init__(self):
        if self.dim not in DIMS:
            raise ValueError(f"dimension must be one of {DIMS}")
        pattern_for(self.dim, self.family)

    @property
    def tolerance_key(self) -> str:
        return "bs"

    @property
    def pattern(self) -> str:
        return pattern_for(self.dim, self.family)

    @property
    def name(self) -> str:
        return f"bs_{self.dim}d_{self.family}"

    @property
    def budget(self) -> tuple[int, int]:
        return BUDGETS[self.dim]

    @cached_property
    def space(self) -> SearchSpace:
        params = []
        for j, c in enumerate(self.pattern, start=1):
            if c == "c":
                params.append(ParameterSpec.continuous(f"x{j}", -5.0, 5.0))
            elif c == "i":
                params.append(ParameterSpec.integer(f"x{j}", 0, 10))
            else:
                params.append(ParameterSpec.discrete(f"x{j}", DISCRETE_LEVELS))
        return SearchSpace(tuple(params))

    def decode(self, candidate) -> np.ndarray:
        return np.array([float(v) if c == "c" else float(v) - ENCODE_SHIFT for c, v in zip(self.pattern, candidate)])

    def __call__(self, candidate) -> float:
        self.space.validate(candidate)
        return bs_raw(self.decode(candidate))

    def truth(self) -> Optimum:
        """Exact optimum: the objective is a sum of one-dimensional terms."""
        best, worst, values = 0.0, 0.0, []
        for j, (c, p) in enumerate(zip(self.pattern, self.space.params)):
            odd = j % 2 == 0
            if c == "c":
                xs = np.linspace(-5.0, 5.0, 20001)
                g = _term(xs, odd)
                k = int(np.argmin(g))
                xk = _refine_min(xs[k], odd)
                lo, hi = float(_term(xk, odd)), float(g.max())
                values.append(xk)
            else:
                lev = np.array(p.levels)
                g = _term(lev - ENCODE_SHIFT, odd)
                k = int(np.argmin(g))
                lo, hi = float(g[k]), float(g.max())
                values.append(int(lev[k]))
            best += lo
            worst += hi
        scale = 1.0 / (2 * self.dim)
        cand = tuple(values)
        intervals = {int(i): (float(values[i]), float(values[i])) for i in self.space.continuous_idx}
        return Optimum(cand, self(cand), best * scale + OFFSET, worst * scale + OFFSET, intervals)


def _refine_min(x0, odd):
    # Newton on the derivative of the 1D term
    x = float(x0)
    for _ in range(50):
        d1 = 0.6 * x**3 - 6.0 * x + 3.0 + ((x + SHIFT) if odd else 0.0)
        d2 = 1.8 * x**2 - 6.0 + (1.0 if odd else 0.0)
        if d2 <= 0:
            break
        step = d1 / d2
        x = min(max(x - step, -5.0), 5.0)
        if abs(step) < 1e-15:
            break
    return x


def all_variants() -> list[BsVariant]:
    return [BsVariant(d, f) for d in DIMS for f in FAMILIES]
