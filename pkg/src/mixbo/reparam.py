"""Probabilistic reparameterization of non-continuous dimensions.

Every binary/integer/discrete dimension gets a scalar ``theta`` that places a
two-point distribution on the pair of adjacent levels bracketing it; every
categorical dimension gets a length-C vector mapped through a tempered softmax.
The probabilistic objective (PO) is the expectation of an acquisition function
under the product of these distributions with the continuous part ``x`` held
as is. PO is multilinear in the per-dimension probabilities, which gives the
analytic theta-gradient used here.

Optimization variables are packed as ``z = [x (continuous dims) | theta blocks]``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .benchmarks.sobol import MAX_DIM, sobol_points
from .space import BINARY, CATEGORICAL, CONTINUOUS, DISCRETE, INTEGER, SearchSpace

DEFAULT_TAU = 0.1
DEFAULT_ENUM_CAP = 1024
DEFAULT_MC = 128

CAT_DIVIDE = "divide"  # softmax((theta - 0.5) / tau)
CAT_MULTIPLY = "multiply"  # softmax((theta - 0.5) * tau)

# af(X, grad) -> (values (m,), d values / dX (m, dim) or None); larger is better
AcqFn = Callable[[np.ndarray, bool], tuple]


class ModeError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite distribution over the levels (or category indices) of one dimension."""

    values: tuple
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if len(p) != len(self.values):
            raise ValueError("values and probs differ in length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")

    @classmethod
    def point_mass(cls, value):
        return cls((value,), np.ones(1))

    def prob(self, value) -> float:
        return float(sum(p for v, p in zip(self.values, self.probs) if v == value))


def _level_positions(kind, levels):
    """Theta coordinates of the levels: level index for binary/integer, raw value for discrete."""
    if kind in (BINARY, INTEGER):
        return np.arange(len(levels), dtype=float)
    return np.asarray(levels, dtype=float)


def _bracket(pos: np.ndarray, theta):
    """Lower index of the bracket holding theta; the top edge belongs to the last bracket."""
    return np.clip(np.searchsorted(pos, theta, side="right") - 1, 0, len(pos) - 2)


def transform(kind: str, theta, levels=None, tau: float = DEFAULT_TAU, cat_mode: str = CAT_DIVIDE) -> DiscreteDistribution:
    """Distribution induced by ``theta`` on one dimension.

    ``levels`` are the level values (ordinal kinds) or the category count
    (categorical). Out-of-range theta is clamped.
    """
    if kind == CATEGORICAL:
        theta = np.clip(np.asarray(theta, dtype=float), 0.0, 1.0)
        C = levels if isinstance(levels, int) else len(theta)
        if len(theta) != C:
            raise ValueError(f"categorical theta needs {C} entries")
        probs, _ = _softmax_probs(theta[None], tau, cat_mode)
        return DiscreteDistribution(tuple(range(C)), probs[0])
    if kind == BINARY and levels is None:
        levels = (0, 1)
    if kind not in (BINARY, INTEGER, DISCRETE):
        raise ValueError(f"no reparameterization for kind {kind!r}")
    pos = _level_positions(kind, levels)
    t = float(np.clip(theta, pos[0], pos[-1]))
    i = int(_bracket(pos, t))
    mid = 0.5 * (pos[i] + pos[i + 1])
    p_up = float(special.expit((t - mid) / tau))
    return DiscreteDistribution((levels[i], levels[i + 1]), np.array([1.0 - p_up, p_up]))


def _softmax_probs(theta, tau, cat_mode):
    c = 1.0 / tau if cat_mode == CAT_DIVIDE else tau
    logits = (theta - 0.5) * c
    return special.softmax(logits, axis=-1), c


@dataclass
class _Block:
    dim: int
    kind: str
    start: int
    width: int
    anchors: np.ndarray
    pos: np.ndarray | None = None


class ThetaLayout:
    """Packing of ``(x, theta)`` and the per-dimension distributions they induce."""

    def __init__(self, space: SearchSpace, tau: float = DEFAULT_TAU, cat_mode: str = CAT_DIVIDE):
        if not tau > 0:
            raise ValueError("temperature must be positive")
        if cat_mode not in (CAT_DIVIDE, CAT_MULTIPLY):
            raise ValueError(f"unknown categorical mode {cat_mode!r}")
        self.space = space
        self.tau = tau
        self.cat_mode = cat_mode
        self.cont_idx = space.continuous_idx
        n = len(self.cont_idx)
        lower, upper = [0.0] * n, [1.0] * n
        self.blocks: list[_Block] = []
        for i, p in enumerate(space.params):
            if p.kind == CONTINUOUS:
                continue
            if p.kind == CATEGORICAL:
                C = p.n_levels
                self.blocks.append(_Block(i, p.kind, n, C, np.arange(C, dtype=float)))
                lower += [0.0] * C
                upper += [1.0] * C
                n += C
            else:
                pos = _level_positions(p.kind, p.levels)
                self.blocks.append(_Block(i, p.kind, n, 1, p.anchors, pos))
                lower.append(pos[0])
                upper.append(pos[-1])
                n += 1
        self.size = n
        self.lower = np.array(lower)
        self.upper = np.array(upper)

    @property
    def support_sizes(self) -> list[int]:
        return [2 if b.kind != CATEGORICAL else b.width for b in self.blocks]

    @property
    def joint_support_size(self) -> int:
        return math.prod(self.support_sizes)

    def clamp(self, Z):
        return np.clip(Z, self.lower, self.upper)

    def probs(self, Z):
        """Per block: (support indices (R, s), probs (R, s), d probs / d theta (R, s, width))."""
        Z = np.atleast_2d(Z)
        out = []
        for b in self.blocks:
            th = Z[:, b.start : b.start + b.width]
            if b.kind == CATEGORICAL:
                P, c = _softmax_probs(th, self.tau, self.cat_mode)
                J = c * (P[:, :, None] * (np.eye(b.width)[None] - P[:, None, :]))
                idx = np.broadcast_to(np.arange(b.width), P.shape)
                out.append((idx, P, J))
            else:
                t = th[:, 0]
                i = _bracket(b.pos, t)
                mid = 0.5 * (b.pos[i] + b.pos[i + 1])
                p = special.expit((t - mid) / self.tau)
                dp = p * (1.0 - p) / self.tau
                idx = np.stack([i, i + 1], axis=1)
                P = np.stack([1.0 - p, p], axis=1)
                J = np.stack([-dp, dp], axis=1)[:, :, None]
                out.append((idx, P, J))
        return out

    def distributions(self, z) -> list[DiscreteDistribution]:
        """Per non-continuous dimension, the induced distribution over raw values."""
        dists = []
        for b, (idx, P, _) in zip(self.blocks, self.probs(np.asarray(z)[None])):
            p = self.space.params[b.dim]
            vals = [int(k) for k in idx[0]] if b.kind == CATEGORICAL else [_raw_level(p, k) for k in idx[0]]
            dists.append(DiscreteDistribution(tuple(vals), P[0]))
        return dists

    def theta_for(self, point) -> np.ndarray:
        """``z`` that concentrates (up to temperature) on a given normalized point."""
        point = np.asarray(point, dtype=float)
        z = np.empty(self.size)
        z[: len(self.cont_idx)] = point[self.cont_idx]
        for b in self.blocks:
            if b.kind == CATEGORICAL:
                z[b.start : b.start + b.width] = 0.0
                z[b.start + int(round(point[b.dim]))] = 1.0
            else:
                z[b.start] = b.pos[int(np.argmin(np.abs(b.anchors - point[b.dim])))]
        return z

    def initial(self, n: int, rng: np.random.Generator, skip: int = 0) -> np.ndarray:
        """Restart points: Sobol over x and ordinal theta, near-uniform categorical logits."""
        ord_blocks = [b for b in self.blocks if b.kind != CATEGORICAL]
        k = len(self.cont_idx) + len(ord_blocks)
        Z = np.empty((n, self.size))
        if k:
            U = sobol_points(k, n, skip) if k <= MAX_DIM else rng.random((n, k))
            nc = len(self.cont_idx)
            Z[:, :nc] = U[:, :nc]
            for j, b in enumerate(ord_blocks):
                Z[:, b.start] = b.pos[0] + U[:, nc + j] * (b.pos[-1] - b.pos[0])
        for b in self.blocks:
            if b.kind == CATEGORICAL:
                Z[:, b.start : b.start + b.width] = 0.5 + 0.1 * rng.standard_normal((n, b.width))
        return self.clamp(Z)

    def points(self, Z, combos):
        """Normalized points for every restart and support combination, shape (R, S, dim)."""
        Z = np.atleast_2d(Z)
        R, S = Z.shape[0], combos.shape[1]
        X = np.empty((R, S, self.space.dim))
        X[:, :, self.cont_idx] = Z[:, None, : len(self.cont_idx)]
        for j, b in enumerate(self.blocks):
            X[:, :, b.dim] = b.anchors[combos[:, :, j]]
        return X


def _raw_level(p, k):
    v = p.levels[int(k)]
    return int(v) if float(v).is_integer() else float(v)


def _contract(A, probs, keep=None):
    """Contract ``A`` (R, s_1..s_K) with per-block probabilities, leaving block ``keep`` open."""
    T = A
    axes = list(range(len(probs)))
    for d in reversed(range(len(probs))):
        if d == keep:
            continue
        ax = axes.index(d) + 1
        shape = [1] * T.ndim
        shape[0], shape[ax] = probs[d].shape
        T = (T * probs[d].reshape(shape)).sum(axis=ax)
        axes.remove(d)
    return T


class ProbabilisticObjective:
    """PO(z) = E_{q ~ p(.|theta)} af(x, q), exact or Monte-Carlo."""

    def __init__(self, af: AcqFn, layout: ThetaLayout, mode: str = "auto", enum_cap: int = DEFAULT_ENUM_CAP,
                 n_mc: int = DEFAULT_MC, seed: int = 0):
        self.af = af
        self.layout = layout
        size = layout.joint_support_size
        if mode == "auto":
            mode = "exact" if size <= enum_cap else "mc"
        if mode == "exact" and size > enum_cap:
            raise ModeError(f"joint support {size} exceeds enumeration cap {enum_cap}")
        if mode not in ("exact", "mc"):
            raise ModeError(f"unknown mode {mode!r}")
        self.mode = mode
        self.n_mc = n_mc
        self.seed = seed
        sizes = layout.support_sizes
        # local support positions of every joint combination, lexicographic
        grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
        self._local = np.stack([g.ravel() for g in grids], axis=1) if sizes else np.zeros((1, 0), dtype=int)
        self._uniforms = {}

    def _mc_uniforms(self, R):
        if R not in self._uniforms:
            rng = np.random.default_rng(self.seed)
            self._uniforms[R] = rng.random((R, self.n_mc, len(self.layout.blocks)))
        return self._uniforms[R]

    def __call__(self, Z):
        return self.evaluate(Z, grad=False)[0]

    def value_and_grad(self, Z):
        return self.evaluate(Z, grad=True)

    def evaluate(self, Z, grad=False):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if self.mode == "exact":
            return self._exact(Z, grad)
        return self._mc(Z, grad)

    def _acq(self, X, grad):
        R, S, D = X.shape
        vals, dvals = self.af(X.reshape(R * S, D), grad)
        vals = np.asarray(vals, dtype=float).reshape(R, S)
        if grad:
            dvals = np.asarray(dvals, dtype=float).reshape(R, S, D)
        return vals, dvals

    def _exact(self, Z, grad):
        lay = self.layout
        R = Z.shape[0]
        blocks = lay.probs(Z)
        sizes = lay.support_sizes
        combos = np.empty((R, self._local.shape[0], len(blocks)), dtype=int)
        for j, (idx, _, _) in enumerate(blocks):
            combos[:, :, j] = np.take_along_axis(idx, np.broadcast_to(self._local[:, j], (R, len(self._local))), axis=1)
        X = lay.points(Z, combos)
        vals, dvals = self._acq(X, grad)
        probs = [P for _, P, _ in blocks]
        A = vals.reshape((R, *sizes))
        po = _contract(A, probs)
        if not grad:
            return po, None
        g = np.zeros_like(Z)
        nc = len(lay.cont_idx)
        if nc:
            w = _joint_weights(probs, self._local)
            g[:, :nc] = np.einsum("rs,rsd->rd", w, dvals[:, :, lay.cont_idx])
        for j, (b, (_, _, J)) in enumerate(zip(lay.blocks, blocks)):
            G = _contract(A, probs, keep=j)
            g[:, b.start : b.start + b.width] = np.einsum("rs,rsw->rw", G, J)
        return po, g

    def _mc(self, Z, grad):
        # score-function gradient for theta, pathwise for x
        lay = self.layout
        R = Z.shape[0]
        U = self._mc_uniforms(R)
        blocks = lay.probs(Z)
        N = self.n_mc
        combos = np.empty((R, N, len(blocks)), dtype=int)
        chosen = []
        for j, (idx, P, _) in enumerate(blocks):
            cdf = np.cumsum(P, axis=1)
            k = np.minimum((U[:, :, j, None] > cdf[:, None, :]).sum(axis=2), P.shape[1] - 1)
            chosen.append(k)
            combos[:, :, j] = np.take_along_axis(idx, k, axis=1)
        X = lay.points(Z, combos)
        vals, dvals = self._acq(X, grad)
        po = vals.mean(axis=1)
        if not grad:
            return po, None
        g = np.zeros_like(Z)
        nc = len(lay.cont_idx)
        if nc:
            g[:, :nc] = dvals[:, :, lay.cont_idx].mean(axis=1)
        centered = vals - po[:, None]
        for j, (b, (_, P, J)) in enumerate(zip(lay.blocks, blocks)):
            k = chosen[j]
            p_sel = np.take_along_axis(P, k, axis=1)
            J_sel = np.take_along_axis(J, k[:, :, None], axis=1)
            score = J_sel / np.maximum(p_sel, 1e-300)[:, :, None]
            g[:, b.start : b.start + b.width] = np.einsum("rn,rnw->rw", centered, score) / N
        return po, g


def _joint_weights(probs, local):
    w = np.ones((probs[0].shape[0] if probs else 1, local.shape[0]))
    for j, P in enumerate(probs):
        w = w * P[:, local[:, j]]
    return w


def probabilistic_objective(af: AcqFn, space: SearchSpace, z, mode="auto", tau=DEFAULT_TAU, n_mc=DEFAULT_MC,
                            enum_cap=DEFAULT_ENUM_CAP, seed=0, cat_mode=CAT_DIVIDE) -> float:
    layout = ThetaLayout(space, tau, cat_mode)
    po = ProbabilisticObjective(af, layout, mode, enum_cap, n_mc, seed)
    return float(po(np.asarray(z, dtype=float)[None])[0])


def po_gradient(af: AcqFn, space: SearchSpace, z, tau=DEFAULT_TAU, cat_mode=CAT_DIVIDE) -> np.ndarray:
    layout = ThetaLayout(space, tau, cat_mode)
    po = ProbabilisticObjective(af, layout, "exact")
    return po.value_and_grad(np.asarray(z, dtype=float)[None])[1][0]


@dataclass
class PrSettings:
    tau: float = DEFAULT_TAU
    restarts: int = 20
    steps: int = 100
    lr: float = 0.025
    n_samples: int = 32
    enum_cap: int = DEFAULT_ENUM_CAP
    n_mc: int = DEFAULT_MC
    cat_mode: str = CAT_DIVIDE
    polish: bool = True


@dataclass
class PrResult:
    z: np.ndarray
    po: float
    layout: ThetaLayout = field(repr=False)
    restart_values: np.ndarray = field(repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.z[: len(self.layout.cont_idx)]

    @property
    def distributions(self) -> list[DiscreteDistribution]:
        return self.layout.distributions(self.z)


def _bracket_polish(objective: ProbabilisticObjective, z, value, sweeps=3):
    """Coordinate ascent over ordinal theta restricted to bracket end points.

    With everything else fixed, PO is affine in one dimension's upper-level
    probability, which is monotone in theta inside a bracket; so the best
    theta of a bracket sits at one of its ends (the open right end is
    approached to within a relative 1e-9).
    """
    lay = objective.layout
    for _ in range(sweeps):
        improved = False
        for b in lay.blocks:
            if b.kind == CATEGORICAL:
                continue
            span = np.diff(b.pos)
            cands = np.concatenate([b.pos, b.pos[1:] - 1e-9 * span])
            Zc = np.tile(z, (len(cands), 1))
            Zc[:, b.start] = cands
            vals = objective(Zc)
            vals = np.where(np.isfinite(vals), vals, -np.inf)
            k = int(np.argmax(vals))
            if vals[k] > value:
                z, value, improved = Zc[k], float(vals[k]), True
        if not improved:
            break
    return z, value


def optimize_acquisition_pr(af: AcqFn, space: SearchSpace, settings: PrSettings | None = None, seed: int = 0,
                            extra_starts: Sequence | None = None) -> PrResult:
    """Multi-restart projected Adam ascent on the probabilistic objective.

    ``extra_starts`` are additional ``z`` vectors appended to the Sobol restarts.
    Each restart keeps the best iterate it visited; the overall best is returned.
    """
    settings = settings or PrSettings()
    layout = ThetaLayout(space, settings.tau, settings.cat_mode)
    objective = ProbabilisticObjective(af, layout, "auto", settings.enum_cap, settings.n_mc, seed)
    rng = np.random.default_rng(seed)
    Z = layout.initial(settings.restarts, rng, skip=seed % 997 * settings.restarts)
    if extra_starts is not None and len(extra_starts):
        Z = np.vstack([Z, layout.clamp(np.atleast_2d(np.asarray(extra_starts, dtype=float)))])
    m = np.zeros_like(Z)
    v = np.zeros_like(Z)
    b1, b2, eps = 0.9, 0.999, 1e-8
    best_val = np.full(len(Z), -np.inf)
    best_z = Z.copy()
    for t in range(1, settings.steps + 1):
        val, g = objective.value_and_grad(Z)
        ok = np.isfinite(val) & np.all(np.isfinite(g), axis=1)
        better = ok & (val > best_val)
        best_val[better] = val[better]
        best_z[better] = Z[better]
        g = np.where(ok[:, None], g, 0.0)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        step = settings.lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
        Z = layout.clamp(Z + step)
    val = objective(Z)
    better = np.isfinite(val) & (val > best_val)
    best_val[better] = val[better]
    best_z[better] = Z[better]
    if not np.any(np.isfinite(best_val)):
        raise FloatingPointError("probabilistic objective was non-finite at every restart")
    k = int(np.argmax(np.where(np.isfinite(best_val), best_val, -np.inf)))
    z, value = best_z[k], float(best_val[k])
    if settings.polish:
        z, value = _bracket_polish(objective, z, value)
    return PrResult(z, value, layout, best_val)


def sample_candidates(result: PrResult, af: AcqFn, n_samples: int = 32, rng: np.random.Generator | None = None,
                      enum_cap: int = DEFAULT_ENUM_CAP):
    """Draw configurations from the optimized distribution and keep the best under ``af``.

    Returns ``(normalized point, af value)``. Draws flagged by ``af.penalized``
    rank below every unflagged draw. If every draw is flagged, the local support is searched next and
    then every level combination (or uniform draws when there are too many),
    so an unflagged point wins whenever one exists.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    lay = result.layout
    blocks = lay.probs(result.z[None])
    combos = np.empty((1, n_samples, len(blocks)), dtype=int)
    for j, (idx, P, _) in enumerate(blocks):
        k = rng.choice(P.shape[1], size=n_samples, p=P[0] / P[0].sum())
        combos[0, :, j] = idx[0, k]
    X = lay.points(result.z[None], combos)[0]
    X, vals, flagged = _score(af, X)
    if blocks and np.all(flagged) and lay.joint_support_size <= enum_cap:
        local = ProbabilisticObjective(af, lay, "exact", enum_cap)._local
        support = np.stack([blocks[j][0][0, local[:, j]] for j in range(len(blocks))], axis=1)[None]
        Xs = lay.points(result.z[None], support)[0]
        Xs, vs, fs = _score(af, Xs)
        if not np.all(fs):
            X, vals, flagged = Xs, vs, fs
    if blocks and np.all(flagged):
        Xs, vs, fs = _score(af, _global_candidates(lay, result.z, enum_cap, rng, 8 * n_samples))
        if not np.all(fs):
            X, vals, flagged = Xs, vs, fs
    order = np.lexsort((np.arange(len(vals)), -vals, flagged))
    best = order[0]
    return X[best], float(vals[best])


def _global_candidates(lay: ThetaLayout, z, enum_cap, rng, n_draws):
    """Every level combination with ``z``'s continuous part, or uniform draws over the levels."""
    sizes = [len(b.anchors) for b in lay.blocks]
    if math.prod(sizes) <= enum_cap:
        combos = np.array(list(itertools.product(*(range(s) for s in sizes))), dtype=int)
    else:
        combos = np.stack([rng.integers(0, s, n_draws) for s in sizes], axis=1)
    return lay.points(z[None], combos[None])[0]


def _score(af, X):
    vals = np.asarray(af(X, False)[0], dtype=float)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    pen = getattr(af, "penalized", None)
    flagged = np.asarray(pen(X), dtype=bool) if pen is not None else np.zeros(len(X), dtype=bool)
    return X, vals, flagged
