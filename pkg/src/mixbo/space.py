"""Mixed-variable search spaces.

A :class:`SearchSpace` is an ordered list of :class:`ParameterSpec`. Candidates
are tuples of raw values (a level value for ordinal dimensions, a category
index for categorical ones). The model works on normalized coordinates where
every non-categorical dimension lives in ``[0, 1]`` and categorical dimensions
carry their category index unchanged.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"
INTEGER = "integer"
DISCRETE = "discrete"
CATEGORICAL = "categorical"

KINDS = (CONTINUOUS, BINARY, INTEGER, DISCRETE, CATEGORICAL)
ORDINAL_KINDS = (BINARY, INTEGER, DISCRETE)

SNAP_TOL = 1e-9
DEFAULT_ENUM_CAP = 1_000_000


class SpaceError(ValueError):
    """Invalid space declaration or a value outside its dimension."""


class SnapError(SpaceError):
    """A normalized ordinal coordinate does not sit on a level anchor."""


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    kind: str
    bounds: tuple[float, float] | None = None
    levels: tuple[float, ...] | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpaceError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == CONTINUOUS:
            if self.bounds is None or not self.bounds[0] < self.bounds[1]:
                raise SpaceError(f"{self.name}: continuous bounds need low < high")
            object.__setattr__(self, "bounds", (float(self.bounds[0]), float(self.bounds[1])))
        elif self.kind == CATEGORICAL:
            if self.categories is None or len(self.categories) < 2:
                raise SpaceError(f"{self.name}: categorical needs >= 2 categories")
            object.__setattr__(self, "categories", tuple(self.categories))
        else:
            levels = self.levels
            if self.kind == BINARY:
                levels = (0.0, 1.0) if levels is None else levels
            if levels is None or len(levels) < 2:
                raise SpaceError(f"{self.name}: {self.kind} needs >= 2 levels")
            levels = tuple(float(v) for v in levels)
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise SpaceError(f"{self.name}: levels must be strictly increasing")
            if self.kind in (BINARY, INTEGER):
                if any(b - a != 1.0 for a, b in zip(levels, levels[1:])) or not levels[0].is_integer():
                    raise SpaceError(f"{self.name}: integer levels must be consecutive integers")
            if self.kind == BINARY and levels != (0.0, 1.0):
                raise SpaceError(f"{self.name}: binary levels are [0, 1]")
            object.__setattr__(self, "levels", levels)
            object.__setattr__(self, "bounds", (levels[0], levels[-1]))

    @classmethod
    def continuous(cls, name, low, high):
        return cls(name, CONTINUOUS, bounds=(low, high))

    @classmethod
    def binary(cls, name):
        return cls(name, BINARY, levels=(0, 1))

    @classmethod
    def integer(cls, name, low, high):
        return cls(name, INTEGER, levels=tuple(range(int(low), int(high) + 1)))

    @classmethod
    def discrete(cls, name, levels):
        return cls(name, DISCRETE, levels=tuple(levels))

    @classmethod
    def categorical(cls, name, categories):
        return cls(name, CATEGORICAL, categories=tuple(categories))

    @property
    def is_ordinal(self) -> bool:
        return self.kind in ORDINAL_KINDS

    @property
    def n_levels(self) -> int:
        if self.kind == CONTINUOUS:
            raise SpaceError(f"{self.name}: continuous dimension has no levels")
        if self.kind == CATEGORICAL:
            return len(self.categories)
        return len(self.levels)

    @property
    def anchors(self) -> np.ndarray:
        """Normalized positions of the ordinal levels."""
        low, high = self.bounds
        return (np.asarray(self.levels) - low) / (high - low)

    def validate(self, value) -> None:
        if self.kind == CONTINUOUS:
            low, high = self.bounds
            if not (low <= value <= high):
                raise SpaceError(f"{self.name}: {value!r} outside [{low}, {high}]")
        elif self.kind == CATEGORICAL:
            if value != int(value) or not 0 <= int(value) < len(self.categories):
                raise SpaceError(f"{self.name}: {value!r} is not a category index")
        elif float(value) not in self.levels:
            raise SpaceError(f"{self.name}: {value!r} is not one of {list(self.levels)}")


@dataclass(frozen=True)
class SearchSpace:
    params: tuple[ParameterSpec, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        params = tuple(self.params)
        object.__setattr__(self, "params", params)
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise SpaceError("parameter names must be unique")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    def __len__(self):
        return len(self.params)

    def __iter__(self):
        return iter(self.params)

    @property
    def dim(self) -> int:
        return len(self.params)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def kinds(self) -> list[str]:
        return [p.kind for p in self.params]

    def indices(self, *kinds: str) -> np.ndarray:
        return np.array([i for i, p in enumerate(self.params) if p.kind in kinds], dtype=int)

    @property
    def continuous_idx(self) -> np.ndarray:
        return self.indices(CONTINUOUS)

    @property
    def categorical_idx(self) -> np.ndarray:
        return self.indices(CATEGORICAL)

    @property
    def numeric_idx(self) -> np.ndarray:
        """Dimensions that take part in distance arithmetic (all but categorical)."""
        return self.indices(CONTINUOUS, *ORDINAL_KINDS)

    @property
    def is_enumerable(self) -> bool:
        return all(p.kind != CONTINUOUS for p in self.params)

    def has(self, *kinds: str) -> bool:
        return any(p.kind in kinds for p in self.params)

    def validate(self, candidate: Sequence) -> None:
        if len(candidate) != self.dim:
            raise SpaceError(f"candidate has {len(candidate)} values, space has {self.dim}")
        for p, v in zip(self.params, candidate):
            p.validate(v)

    def normalize(self, candidate: Sequence) -> np.ndarray:
        self.validate(candidate)
        out = np.empty(self.dim)
        for i, (p, v) in enumerate(zip(self.params, candidate)):
            if p.kind == CATEGORICAL:
                out[i] = int(v)
            else:
                low, high = p.bounds
                out[i] = (float(v) - low) / (high - low)
        return out

    def normalize_many(self, candidates) -> np.ndarray:
        return np.array([self.normalize(c) for c in candidates]).reshape(-1, self.dim)

    def denormalize(self, point: Sequence[float]) -> tuple:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,):
            raise SpaceError(f"point has shape {point.shape}, expected ({self.dim},)")
        values = []
        for p, u in zip(self.params, point):
            if p.kind == CATEGORICAL:
                if u != round(u) or not 0 <= round(u) < p.n_levels:
                    raise SpaceError(f"{p.name}: {u!r} is not a category index")
                values.append(int(round(u)))
                continue
            if not -SNAP_TOL <= u <= 1 + SNAP_TOL:
                raise SpaceError(f"{p.name}: normalized value {u!r} outside [0, 1]")
            if p.kind == CONTINUOUS:
                low, high = p.bounds
                values.append(float(min(max(low + u * (high - low), low), high)))
            else:
                anchors = p.anchors
                j = int(np.argmin(np.abs(anchors - u)))
                if abs(anchors[j] - u) > SNAP_TOL:
                    raise SnapError(f"{p.name}: {u!r} is not on a level anchor")
                values.append(_level_value(p.levels[j]))
        return tuple(values)

    def snap(self, point: Sequence[float]) -> np.ndarray:
        """Move ordinal coordinates to the nearest anchor and categorical ones to a valid index."""
        out = np.array(point, dtype=float)
        for i, p in enumerate(self.params):
            if p.kind == CONTINUOUS:
                out[i] = min(max(out[i], 0.0), 1.0)
            elif p.kind == CATEGORICAL:
                out[i] = min(max(int(np.floor(out[i])), 0), p.n_levels - 1)
            else:
                anchors = p.anchors
                out[i] = anchors[int(np.argmin(np.abs(anchors - out[i])))]
        return out

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        """Map points of the unit cube onto the space: ordinal snapped, categorical floored."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = u.copy()
        for i, p in enumerate(self.params):
            if p.kind == CATEGORICAL:
                out[:, i] = np.minimum(np.floor(u[:, i] * p.n_levels), p.n_levels - 1)
            elif p.kind != CONTINUOUS:
                anchors = p.anchors
                out[:, i] = anchors[np.argmin(np.abs(anchors[None, :] - u[:, i : i + 1]), axis=1)]
        return out

    def support_size(self) -> int:
        if not self.is_enumerable:
            raise SpaceError("space has continuous dimensions and cannot be enumerated")
        return math.prod(p.n_levels for p in self.params)

    def enumerate_support(self, cap: int = DEFAULT_ENUM_CAP) -> list[tuple]:
        size = self.support_size()
        if size > cap:
            raise SpaceError(f"support of size {size} exceeds cap {cap}")
        axes = []
        for p in self.params:
            if p.kind == CATEGORICAL:
                axes.append(range(p.n_levels))
            else:
                axes.append([_level_value(v) for v in p.levels])
        return list(itertools.product(*axes))

    def distance(self, a: Sequence, b: Sequence) -> float:
        return float(self.normalized_distance(self.normalize(a), self.normalize(b)))

    def normalized_distance(self, pa: np.ndarray, pb: np.ndarray) -> np.ndarray:
        """Euclidean distance over numeric coordinates; each categorical mismatch adds 1."""
        pa = np.asarray(pa, dtype=float)
        pb = np.asarray(pb, dtype=float)
        num = self.numeric_idx
        cat = self.categorical_idx
        sq = np.sum((pa[..., num] - pb[..., num]) ** 2, axis=-1)
        if cat.size:
            sq = sq + np.sum(pa[..., cat] != pb[..., cat], axis=-1)
        return np.sqrt(sq)

    def min_distance(self, point: np.ndarray, X: np.ndarray) -> float:
        if len(X) == 0:
            return float("inf")
        return float(np.min(self.normalized_distance(np.asarray(point)[None, :], np.asarray(X))))


def _level_value(v: float):
    return int(v) if float(v).is_integer() else float(v)
