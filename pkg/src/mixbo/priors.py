"""Hyperparameter priors: Gamma (shape/rate) and LogNormal."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

GAMMA = "gamma"
LOGNORMAL = "lognormal"


class PriorError(ValueError):
    pass


@dataclass(frozen=True)
class PriorSpec:
    """``family='gamma'``: (shape, rate). ``family='lognormal'``: (log-mean, log-std)."""

    family: str
    a: float
    b: float

    def __post_init__(self):
        if self.family == GAMMA:
            if not (self.a > 0 and self.b > 0):
                raise PriorError("Gamma prior needs shape > 0 and rate > 0")
        elif self.family == LOGNORMAL:
            if not self.b > 0:
                raise PriorError("LogNormal prior needs s > 0")
        else:
            raise PriorError(f"unknown prior family {self.family!r}")

    @property
    def shape(self):
        return self.a

    @property
    def rate(self):
        return self.b

    def median(self) -> float:
        if self.family == LOGNORMAL:
            return math.exp(self.a)
        return float(special.gammaincinv(self.a, 0.5) / self.b)

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        if self.family == GAMMA:
            return special.gammainc(self.a, self.b * v)
        return 0.5 * special.erfc(-(np.log(v) - self.a) / (self.b * math.sqrt(2.0)))


def prior_log_density(prior: PriorSpec, v):
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise PriorError("prior density is defined for positive values only")
    if prior.family == GAMMA:
        a, rate = prior.a, prior.b
        return a * math.log(rate) - special.gammaln(a) + (a - 1.0) * np.log(v) - rate * v
    mu, s = prior.a, prior.b
    z = (np.log(v) - mu) / s
    return -np.log(v) - math.log(s) - 0.5 * math.log(2.0 * math.pi) - 0.5 * z * z


def prior_dlog_density_dlogv(prior: PriorSpec, v):
    """d/d(log v) of ``prior_log_density(prior, v)``."""
    v = np.asarray(v, dtype=float)
    if prior.family == GAMMA:
        return (prior.a - 1.0) - prior.b * v
    return -1.0 - (np.log(v) - prior.a) / prior.b**2


def gamma_from_quantiles(q1: float, q2: float, p1: float = 0.05, p2: float = 0.5) -> PriorSpec:
    """Gamma(shape, rate) with ``CDF(q1) = p1`` and ``CDF(q2) = p2``.

    The quantile ratio of a Gamma depends on the shape only, so the shape is a
    1D root of ``Q(p1; a) / Q(p2; a) - q1 / q2`` and the rate follows from
    matching ``q2``.
    """
    if not 0 < q1 < q2:
        raise PriorError("need 0 < q1 < q2")
    if not 0 < p1 < p2 < 1:
        raise PriorError("need 0 < p1 < p2 < 1")
    target = math.log(q1 / q2)

    def gap(log_a):
        a = math.exp(log_a)
        return math.log(special.gammaincinv(a, p1)) - math.log(special.gammaincinv(a, p2)) - target

    lo, hi = math.log(0.05), math.log(1e5)
    if gap(lo) * gap(hi) > 0:
        raise PriorError(f"no Gamma matches quantiles ({q1}, {q2}) at ({p1}, {p2})")
    log_a = optimize.brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    a = math.exp(log_a)
    rate = float(special.gammaincinv(a, p2)) / q2
    return PriorSpec(GAMMA, a, rate)


def dimension_lognormal(dim: int) -> PriorSpec:
    """LogNormal(sqrt(2) + log(sqrt(D)), sqrt(3)) lengthscale prior."""
    return PriorSpec(LOGNORMAL, math.sqrt(2.0) + math.log(math.sqrt(dim)), math.sqrt(3.0))


def output_scale_gamma(y_range: float) -> PriorSpec | None:
    """Gamma(2, (1 / (2 * y_range))**2); None for a degenerate range."""
    if not y_range > 0:
        return None
    return PriorSpec(GAMMA, 2.0, (1.0 / (2.0 * y_range)) ** 2)
