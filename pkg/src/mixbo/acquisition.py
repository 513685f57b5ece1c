"""Acquisition functions over a fitted GP, the resampling penalty and the mAF switch.

All evaluators follow the minimization convention of the objective and are
exposed to optimizers in "larger is better" form: EI as is, LCB negated,
posterior variance as is.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .benchmarks.sobol import MAX_DIM, sobol_points
from .gp import GpModel
from .reparam import PrSettings, ThetaLayout, optimize_acquisition_pr, sample_candidates
from .space import CONTINUOUS, SearchSpace

EI = "EI"
LCB = "LCB"
MAX_VARIANCE = "MaxVariance"
KINDS = (EI, LCB, MAX_VARIANCE)

PENALTY_VALUE = 1e6
MATCH_TOL = 1e-9
SQRT_2PI = np.sqrt(2.0 * np.pi)


class AcquisitionError(ValueError):
    pass


def expected_improvement(mu, sigma, f_best):
    """EI for minimization; falls back to ``max(f_best - mu, 0)`` at zero sigma."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise AcquisitionError("sigma must be non-negative")
    imp = f_best - mu
    safe = np.where(sigma > 0, sigma, 1.0)
    with np.errstate(over="ignore"):  # huge |u| only drives the density term to zero
        u = imp / safe
        ei = imp * special.ndtr(u) + safe * np.exp(-0.5 * u * u) / SQRT_2PI
    return np.where(sigma > 0, np.maximum(ei, 0.0), np.maximum(imp, 0.0))


def _ei_partials(mu, sigma, f_best):
    """(dEI/dmu, dEI/dsigma)."""
    safe = np.where(sigma > 0, sigma, 1.0)
    with np.errstate(over="ignore"):
        u = (f_best - mu) / safe
        dmu = np.where(sigma > 0, -special.ndtr(u), -(f_best > mu).astype(float))
        dsig = np.where(sigma > 0, np.exp(-0.5 * u * u) / SQRT_2PI, 0.0)
    return dmu, dsig


def lower_confidence_bound(mu, sigma, weight=2.0):
    if weight <= 0:
        raise AcquisitionError("LCB weight must be positive")
    return np.asarray(mu, dtype=float) - weight * np.asarray(sigma, dtype=float)


def sampled_mask(X, sampled, tol=MATCH_TOL) -> np.ndarray:
    """True where a row of ``X`` coincides with a row of ``sampled`` in every coordinate."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if sampled is None or len(sampled) == 0:
        return np.zeros(len(X), dtype=bool)
    S = np.atleast_2d(np.asarray(sampled, dtype=float))
    out = np.zeros(len(X), dtype=bool)
    for start in range(0, len(X), 4096):
        blk = X[start : start + 4096]
        out[start : start + len(blk)] = np.any(np.all(np.abs(blk[:, None, :] - S[None]) <= tol, axis=2), axis=1)
    return out


def apply_penalty(mu, X, sampled, value=PENALTY_VALUE, tol=MATCH_TOL):
    """Posterior mean with ``value`` added at already-sampled inputs."""
    mu = np.asarray(mu, dtype=float)
    return np.where(sampled_mask(X, sampled, tol), mu + value, mu)


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: str = EI
    lcb_weight: float = 2.0
    penalty: bool = True
    penalty_value: float = PENALTY_VALUE
    maf_threshold: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AcquisitionError(f"unknown acquisition {self.kind!r}")
        if not self.lcb_weight > 0:
            raise AcquisitionError("LCB weight must be positive")
        if self.penalty and self.penalty_value < 1e4:
            raise AcquisitionError("penalty value must be at least 1e4")
        if self.maf_threshold is not None and not self.maf_threshold > 0:
            raise AcquisitionError("mAF threshold must be positive")


class AcquisitionFunction:
    """Callable ``(X, grad) -> (values, dvalues/dX)`` in maximization form."""

    def __init__(self, model: GpModel, kind: str = EI, lcb_weight: float = 2.0, sampled=None,
                 penalty_value: float | None = PENALTY_VALUE, f_best: float | None = None):
        if kind not in KINDS:
            raise AcquisitionError(f"unknown acquisition {kind!r}")
        self.model = model
        self.kind = kind
        self.lcb_weight = lcb_weight
        self.sampled = None if sampled is None else np.atleast_2d(np.asarray(sampled, dtype=float))
        self.penalty_value = penalty_value
        self.f_best = float(np.min(model.data.y_std)) if f_best is None else float(f_best)

    def penalized(self, X) -> np.ndarray:
        if self.penalty_value is None or self.kind == MAX_VARIANCE:
            return np.zeros(len(np.atleast_2d(X)), dtype=bool)
        return sampled_mask(X, self.sampled)

    def __call__(self, X, grad=False):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        post = self.model.posterior(X, grad=grad)
        if self.kind == MAX_VARIANCE:
            return post.var, post.dvar if grad else None
        mu = post.mean
        if self.penalty_value is not None:
            mu = np.where(self.penalized(X), mu + self.penalty_value, mu)
        sigma = np.sqrt(post.var)
        if self.kind == EI:
            val = expected_improvement(mu, sigma, self.f_best)
            dmu, dsig = _ei_partials(mu, sigma, self.f_best)
        else:
            val = -lower_confidence_bound(mu, sigma, self.lcb_weight)
            dmu, dsig = -np.ones_like(mu), np.full_like(mu, self.lcb_weight)
        if not grad:
            return val, None
        dsig_dvar = np.where(sigma > 0, 0.5 / np.where(sigma > 0, sigma, 1.0), 0.0)
        dval = dmu[:, None] * post.dmean + (dsig * dsig_dvar)[:, None] * post.dvar
        return val, dval


@dataclass
class Proposal:
    point: np.ndarray
    candidate: tuple
    af_value: float
    af_kind: str
    used_exploration: bool
    min_distance_to_data: float


def propose_pr(af: AcquisitionFunction, space: SearchSpace, settings: PrSettings, seed: int,
               sampled=None, used_exploration=False) -> Proposal:
    """Optimize the probabilistic objective and sample the final candidate."""
    extra = None
    data = af.model.data
    if len(data.X):
        # seed the optimizer with the incumbent configuration
        lay = ThetaLayout(space, settings.tau, settings.cat_mode)
        extra = lay.theta_for(data.X[int(np.argmin(data.y_std))])[None]
    res = optimize_acquisition_pr(af, space, settings, seed=seed, extra_starts=extra)
    rng = np.random.default_rng(seed)
    point, value = sample_candidates(res, af, settings.n_samples, rng, settings.enum_cap)
    point = space.snap(point)
    X = data.X if sampled is None else sampled
    return Proposal(point, space.denormalize(point), value, af.kind, used_exploration, space.min_distance(point, X))


def max_variance(model: GpModel, space: SearchSpace, settings: PrSettings | None = None, seed: int = 0) -> Proposal:
    """Point of largest posterior variance, found with the PR optimizer."""
    af = AcquisitionFunction(model, MAX_VARIANCE, penalty_value=None)
    return propose_pr(af, space, settings or PrSettings(), seed, used_exploration=True)


def maf_step(previous: Proposal | None, threshold: float | None, base_kind: str) -> str:
    """AF kind for the next iteration under the modified workflow.

    A near-duplicate proposal switches the next iteration to max variance;
    an exploration iteration never triggers another one.
    """
    if threshold is None or previous is None or previous.used_exploration:
        return base_kind
    if not threshold > 0:
        raise AcquisitionError("mAF threshold must be positive")
    return MAX_VARIANCE if previous.min_distance_to_data < threshold else base_kind


class MafController:
    def __init__(self, base_kind: str, threshold: float | None):
        self.base_kind = base_kind
        self.threshold = threshold
        self.next_kind = base_kind

    def observe(self, proposal: Proposal) -> str:
        self.next_kind = maf_step(proposal, self.threshold, self.base_kind)
        return self.next_kind


# -- kernel-rounding path -----------------------------------------------------

KR_MAX_COMBOS = 20000


def optimize_acquisition_kr(af: AcquisitionFunction, space: SearchSpace, n_cont: int = 64, n_local: int = 5,
                            seed: int = 0, max_combos: int = KR_MAX_COMBOS):
    """Integer-level enumeration crossed with Sobol continuous points, then Nelder-Mead.

    Returns ``(normalized point, af value)``. When the integer grid exceeds
    ``max_combos`` a seeded subset of combinations is scored instead.
    """
    rng = np.random.default_rng(seed)
    cont = space.continuous_idx
    ords = [i for i, p in enumerate(space.params) if p.kind != CONTINUOUS]
    anchor_lists = [space.params[i].anchors for i in ords]
    n_combos = int(np.prod([len(a) for a in anchor_lists])) if ords else 1
    if n_combos <= max_combos:
        combos = np.array(list(itertools.product(*anchor_lists))) if ords else np.zeros((1, 0))
    else:
        combos = np.column_stack([a[rng.integers(0, len(a), max_combos)] for a in anchor_lists])
        combos = np.unique(combos, axis=0)
    if len(cont):
        C = sobol_points(len(cont), n_cont, skip=seed % 997 * n_cont) if len(cont) <= MAX_DIM else rng.random((n_cont, len(cont)))
    else:
        C = np.zeros((1, 0))
    best_x, best_v = None, -np.inf
    scored = []
    for start in range(0, len(combos), max(1, 4096 // len(C))):
        blk = combos[start : start + max(1, 4096 // len(C))]
        X = np.empty((len(blk) * len(C), space.dim))
        X[:, ords] = np.repeat(blk, len(C), axis=0)
        X[:, cont] = np.tile(C, (len(blk), 1))
        v = af(X, False)[0]
        v = np.where(np.isfinite(v), v, -np.inf)
        top = np.argsort(-v, kind="stable")[:n_local]
        scored.extend((float(v[k]), start * len(C) + int(k), X[k]) for k in top)
    scored.sort(key=lambda t: (-t[0], t[1]))
    for v0, _, x0 in scored[:n_local]:
        if v0 > best_v:
            best_x, best_v = x0.copy(), v0
        if not len(cont):
            continue

        def neg(u, x0=x0):
            x = x0.copy()
            x[cont] = np.clip(u, 0.0, 1.0)
            val = af(x[None], False)[0][0]
            return -val if np.isfinite(val) else np.inf

        res = optimize.minimize(neg, x0[cont], method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 400})
        if np.isfinite(res.fun) and -res.fun > best_v:
            best_x = x0.copy()
            best_x[cont] = np.clip(res.x, 0.0, 1.0)
            best_v = float(-res.fun)
    return best_x, best_v
