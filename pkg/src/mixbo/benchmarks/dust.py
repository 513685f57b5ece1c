"""Table-driven step landscapes over (continuous x, binary b, discrete d).

Each (b, d) slice is a piecewise-linear function of x given as contiguous
segments; a segment covers ``[x_lo, x_hi)`` except the last one, which also
owns the upper bound.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources

import numpy as np

from ..space import ParameterSpec, SearchSpace
from .truth import Optimum

VARIANTS = ("dust1", "dust2")


class DustTableError(ValueError):
    pass


def _key(b, d) -> str:
    return f"{int(b)},{int(d) if float(d).is_integer() else d}"


@dataclass(frozen=True)
class DustBenchmark:
    table: dict = field(repr=False, compare=False)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "name", self.table["name"])
        self._validate()

    def _validate(self):
        lo, hi = self.table["continuous"]["bounds"]
        for b in (0, 1):
            for d in self.table["discrete"]["levels"]:
                segs = self.table["slices"].get(_key(b, d))
                if not segs:
                    raise DustTableError(f"{self.name}: slice {_key(b, d)} missing")
                if segs[0][0] != lo or segs[-1][1] != hi:
                    raise DustTableError(f"{self.name}: slice {_key(b, d)} does not span [{lo}, {hi}]")
                for s, t in zip(segs, segs[1:]):
                    if s[1] != t[0]:
                        raise DustTableError(f"{self.name}: slice {_key(b, d)} has a gap at {s[1]}")
                if any(s[1] <= s[0] for s in segs):
                    raise DustTableError(f"{self.name}: empty segment in slice {_key(b, d)}")

    @property
    def tolerance_key(self) -> str:
        return self.name

    @property
    def budget(self) -> tuple[int, int]:
        init, iters = self.table["budget"]
        return int(init), int(iters)

    @property
    def maf_threshold(self) -> float:
        return float(self.table["maf_threshold"])

    @cached_property
    def space(self) -> SearchSpace:
        c, b, d = self.table["continuous"], self.table["binary"], self.table["discrete"]
        return SearchSpace((
            ParameterSpec.continuous(c["name"], *c["bounds"]),
            ParameterSpec.binary(b["name"]),
            ParameterSpec.discrete(d["name"], d["levels"]),
        ))

    @cached_property
    def _arrays(self):
        out = {}
        for key, segs in self.table["slices"].items():
            a = np.asarray(segs, dtype=float)
            out[key] = (a[:, 0], a[:, 1], a[:, 2], a[:, 3])
        return out

    def slice_value(self, b, d, x):
        x0, x1, v0, v1 = self._arrays[_key(b, d)]
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(x0, x, side="right") - 1, 0, len(x0) - 1)
        t = (x - x0[k]) / (x1[k] - x0[k])
        return v0[k] + (v1[k] - v0[k]) * t

    def __call__(self, candidate) -> float:
        self.space.validate(candidate)
        x, b, d = candidate
        return float(self.slice_value(b, d, x))

    def truth(self) -> Optimum:
        """Exact optimum from the table: plateau extremes and ramp end points."""
        y_min, y_max = np.inf, -np.inf
        best = None
        for b in (0, 1):
            for d in self.table["discrete"]["levels"]:
                for lo, hi, v0, v1 in self.table["slices"][_key(b, d)]:
                    y_max = max(y_max, v0, v1)
                    m = min(v0, v1)
                    if m < y_min:
                        y_min = m
                        best = [(b, d, lo, hi, v0, v1)]
                    elif m == y_min:
                        best.append((b, d, lo, hi, v0, v1))
        b, d, lo, hi, v0, v1 = best[0]
        if v0 != v1:
            raise DustTableError(f"{self.name}: the global minimum must sit on a flat plateau")
        # merge adjacent optimal plateaus of the same slice
        for bb, dd, l2, h2, _, _ in best[1:]:
            if (bb, dd) == (b, d) and l2 == hi:
                hi = h2
        x_mid = 0.5 * (lo + hi)
        cand = (float(x_mid), int(b), _level(d))
        return Optimum(cand, float(y_min), float(y_min), float(y_max), {0: (float(lo), float(hi))})


def _level(d):
    return int(d) if float(d).is_integer() else float(d)


@lru_cache(maxsize=None)
def _load_table(name: str) -> str:
    return resources.files("mixbo.benchmarks").joinpath(f"data/{name}.json").read_text()


def load_dust(name: str) -> DustBenchmark:
    name = name.lower()
    if name not in VARIANTS:
        raise ValueError(f"unknown DUST variant {name!r}; expected one of {VARIANTS}")
    return DustBenchmark(json.loads(_load_table(name)))


def load_dust_file(path) -> DustBenchmark:
    with open(path) as fh:
        return DustBenchmark(json.load(fh))
