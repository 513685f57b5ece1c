"""Exact GP regression on standardized targets with MAP hyperparameter fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .kernels import BoundKernel, HyperParams, KernelSpec, bind
from .space import SearchSpace

NOISE_FLOOR = 1e-6
DEFAULT_JITTER = 1e-6
MAX_JITTER = 1e-4
LOG_2PI = math.log(2.0 * math.pi)

# projection box for log-parameters during fitting
LOG_LS_BOUNDS = (math.log(1e-3), math.log(1e3))
LOG_CAT_BOUNDS = (math.log(1e-3), math.log(1e3))
LOG_SCALE_BOUNDS = (math.log(1e-6), math.log(1e4))
LOG_NOISE_BOUNDS = (math.log(NOISE_FLOOR), math.log(10.0))


class GpNumericError(ArithmeticError):
    """Covariance factorization failed even after jitter escalation."""


@dataclass
class Dataset:
    X: np.ndarray
    y_raw: np.ndarray
    y_std: np.ndarray = field(init=False)
    y_mean: float = field(init=False)
    y_sd: float = field(init=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y_raw = np.asarray(self.y_raw, dtype=float).ravel()
        if len(self.X) != len(self.y_raw):
            raise ValueError(f"{len(self.X)} inputs but {len(self.y_raw)} targets")
        if len(self.y_raw) == 0:
            raise ValueError("dataset is empty")
        self.y_mean = float(np.mean(self.y_raw))
        sd = float(np.std(self.y_raw))
        self.y_sd = sd if sd > 1e-12 * max(1.0, abs(self.y_mean)) else 1.0
        self.y_std = (self.y_raw - self.y_mean) / self.y_sd

    @property
    def n(self) -> int:
        return len(self.y_raw)

    @property
    def y_range(self) -> float:
        """Range of the standardized targets (feeds the output-scale prior)."""
        return float(np.ptp(self.y_std))


def _jitter_ladder(jitter):
    ladder = [jitter]
    for j in (1e-6, 1e-5, MAX_JITTER):
        if j > ladder[-1]:
            ladder.append(j)
    return ladder


def _cholesky(A, jitter):
    """Lower Cholesky of ``A + jitter*I`` with escalation; returns (L, jitter used)."""
    n = A.shape[-1]
    eye = np.eye(n)
    for j in _jitter_ladder(jitter):
        try:
            return np.linalg.cholesky(A + j * eye), j
        except np.linalg.LinAlgError:
            continue
    raise GpNumericError(f"covariance not positive definite with jitter up to {MAX_JITTER:g}")


@dataclass
class PosteriorResult:
    mean: np.ndarray
    var: np.ndarray
    cov: np.ndarray | None = None
    dmean: np.ndarray | None = None
    dvar: np.ndarray | None = None


@dataclass
class GpModel:
    kernel: BoundKernel
    phi: np.ndarray
    noise: float
    data: Dataset
    jitter: float = DEFAULT_JITTER
    chol: np.ndarray = field(init=False, repr=False)
    alpha: np.ndarray = field(init=False, repr=False)
    jitter_used: float = field(init=False)

    def __post_init__(self):
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        self.phi = np.asarray(self.phi, dtype=float)
        K = self.kernel.matrices(self.data.X, self.data.X, self.phi[None])[0][0]
        A = K + self.noise * np.eye(self.data.n)
        self.chol, self.jitter_used = _cholesky(A, self.jitter)
        self.alpha = linalg.cho_solve((self.chol, True), self.data.y_std)

    @classmethod
    def from_hp(cls, kernel: BoundKernel, hp: HyperParams, data: Dataset, jitter=DEFAULT_JITTER):
        return cls(kernel, kernel.pack(hp), float(hp.noise), data, jitter)

    @property
    def spec(self) -> KernelSpec:
        return self.kernel.spec

    @property
    def hp(self) -> HyperParams:
        return self.kernel.unpack(self.phi, self.noise)

    @property
    def prior_variance(self) -> float:
        return float(self.kernel.prior_variance(self.phi[None])[0])

    def posterior(self, Xtest, full_cov=False, grad=False) -> PosteriorResult:
        """Posterior at ``Xtest`` (standardized scale).

        With ``grad=True`` also returns ``d mean / d x`` and ``d var / d x`` of
        shape ``(m, dim)``; categorical coordinates get zero.
        """
        Xtest = np.atleast_2d(np.asarray(Xtest, dtype=float))
        Ks, _, dKs = self.kernel.matrices(Xtest, self.data.X, self.phi[None], grad_x=grad)
        Ks = Ks[0]
        mean = Ks @ self.alpha
        V = linalg.solve_triangular(self.chol, Ks.T, lower=True)
        if full_cov:
            Kss = self.kernel.matrices(Xtest, Xtest, self.phi[None])[0][0]
            cov = Kss - V.T @ V
            var = np.maximum(np.diag(cov).copy(), 0.0)
        else:
            cov = None
            var = np.maximum(self.prior_variance - np.einsum("ij,ij->j", V, V), 0.0)
        dmean = dvar = None
        if grad:
            dKs = dKs[0]  # (dim, m, n)
            dmean = np.einsum("dmn,n->md", dKs, self.alpha)
            W = linalg.cho_solve((self.chol, True), Ks.T)  # (n, m)
            dvar = -2.0 * np.einsum("dmn,nm->md", dKs, W)
            dvar[var <= 0.0] = 0.0
        return PosteriorResult(mean, var, cov, dmean, dvar)

    def posterior_raw(self, Xtest) -> PosteriorResult:
        post = self.posterior(Xtest)
        sd, mu = self.data.y_sd, self.data.y_mean
        return PosteriorResult(post.mean * sd + mu, post.var * sd * sd)

    def log_marginal_likelihood(self) -> float:
        y = self.data.y_std
        return float(-0.5 * y @ self.alpha - np.sum(np.log(np.diag(self.chol))) - 0.5 * self.data.n * LOG_2PI)


def posterior(model: GpModel, Xtest, full_cov=False, grad=False) -> PosteriorResult:
    return model.posterior(Xtest, full_cov=full_cov, grad=grad)


def log_marginal_likelihood(kernel: BoundKernel, hp: HyperParams, data: Dataset, jitter=DEFAULT_JITTER) -> float:
    return GpModel.from_hp(kernel, hp, data, jitter).log_marginal_likelihood()


def lml_and_grad(kernel: BoundKernel, psi, data: Dataset, jitter=DEFAULT_JITTER, with_prior=False):
    """Batched LML (optionally plus log priors) and gradient in log-parameter space.

    ``psi`` has shape ``(B, P + 1)``: the kernel's ``phi`` followed by log noise.
    Restarts whose covariance cannot be factorized get ``-inf`` and zero gradient.
    """
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    B = psi.shape[0]
    phi, log_noise = psi[:, :-1], psi[:, -1]
    noise = np.exp(log_noise)
    X, y, n = data.X, data.y_std, data.n
    K, dK, _ = kernel.matrices(X, X, phi, grad_params=True)
    A = K + noise[:, None, None] * np.eye(n)
    value = np.full(B, -np.inf)
    grad = np.zeros_like(psi)
    try:
        Ls = np.linalg.cholesky(A + jitter * np.eye(n))
    except np.linalg.LinAlgError:
        Ls = None
    if Ls is not None:
        # all restarts factorized: batched inverse through the triangular factor
        Linv = np.linalg.solve(Ls, np.broadcast_to(np.eye(n), Ls.shape))
        Ainv = np.swapaxes(Linv, 1, 2) @ Linv
        alpha = Ainv @ y
        value = -0.5 * alpha @ y - np.sum(np.log(np.diagonal(Ls, axis1=1, axis2=2)), axis=1) - 0.5 * n * LOG_2PI
        Wm = alpha[:, :, None] * alpha[:, None, :] - Ainv
        grad[:, :-1] = 0.5 * (dK.reshape(B, dK.shape[1], n * n) @ Wm.reshape(B, n * n, 1))[:, :, 0]
        grad[:, -1] = 0.5 * noise * np.trace(Wm, axis1=1, axis2=2)
    else:
        for b in range(B):
            try:
                L = _cholesky(A[b], jitter)[0]
            except GpNumericError:
                continue
            alpha = linalg.cho_solve((L, True), y)
            Ainv = linalg.cho_solve((L, True), np.eye(n))
            value[b] = -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * LOG_2PI
            Wm = np.outer(alpha, alpha) - Ainv
            grad[b, :-1] = 0.5 * np.einsum("ij,pij->p", Wm, dK[b])
            grad[b, -1] = 0.5 * noise[b] * np.trace(Wm)
    if with_prior:
        lp, glp = kernel.log_prior(phi, data.y_range)
        value = value + lp
        grad[:, :-1] += glp
    return value, grad


def _param_bounds(kernel: BoundKernel):
    lo, hi = [], []
    for _ in range(kernel.n_ls):
        lo.append(LOG_LS_BOUNDS[0]), hi.append(LOG_LS_BOUNDS[1])
    for _ in range(kernel.n_cat):
        lo.append(LOG_CAT_BOUNDS[0]), hi.append(LOG_CAT_BOUNDS[1])
    for _ in range(kernel.n_params - kernel.n_ls - kernel.n_cat):
        lo.append(LOG_SCALE_BOUNDS[0]), hi.append(LOG_SCALE_BOUNDS[1])
    lo.append(LOG_NOISE_BOUNDS[0]), hi.append(LOG_NOISE_BOUNDS[1])
    return np.array(lo), np.array(hi)


def initial_params(kernel: BoundKernel, restarts: int, noise_init: float, rng: np.random.Generator):
    """Restart 0 is the heuristic start; the rest are log-uniform draws."""
    P = kernel.n_params
    first = np.concatenate([kernel.pack(kernel.default_hp(noise_init)), [math.log(max(noise_init, NOISE_FLOOR))]])
    out = np.tile(first, (restarts, 1))
    if restarts > 1:
        m = restarts - 1
        out[1:, : kernel.n_ls] = rng.uniform(math.log(0.05), math.log(2.0), (m, kernel.n_ls))
        out[1:, kernel.n_ls : kernel.n_ls + kernel.n_cat] = rng.uniform(math.log(0.1), math.log(3.0), (m, kernel.n_cat))
        out[1:, kernel.n_ls + kernel.n_cat : P] = rng.uniform(math.log(0.2), math.log(5.0), (m, P - kernel.n_ls - kernel.n_cat))
        out[1:, P] = rng.uniform(math.log(1e-4), math.log(1e-1), m)
    return out


@dataclass
class FitSettings:
    noise_init: float = 1e-3
    restarts: int = 5
    steps: int = 200
    lr: float = 0.05
    jitter: float = DEFAULT_JITTER
    seed: int = 0


def fit_map(spec: KernelSpec | str, data: Dataset, space: SearchSpace, settings: FitSettings | None = None, **overrides) -> GpModel:
    """MAP fit by batched projected Adam over restarts; returns the best model."""
    settings = settings or FitSettings()
    if overrides:
        settings = FitSettings(**{**settings.__dict__, **overrides})
    if data.n < 2:
        raise ValueError("MAP fitting needs at least 2 observations")
    kernel = spec if isinstance(spec, BoundKernel) else bind(spec, space)
    rng = np.random.default_rng(settings.seed)
    psi = initial_params(kernel, settings.restarts, settings.noise_init, rng)
    lo, hi = _param_bounds(kernel)
    psi = np.clip(psi, lo, hi)

    m = np.zeros_like(psi)
    v = np.zeros_like(psi)
    b1, b2, eps = 0.9, 0.999, 1e-8
    best_val = np.full(len(psi), -np.inf)
    best_psi = psi.copy()
    for t in range(1, settings.steps + 1):
        val, g = lml_and_grad(kernel, psi, data, settings.jitter, with_prior=True)
        improved = val > best_val
        best_val[improved] = val[improved]
        best_psi[improved] = psi[improved]
        g = np.where(np.isfinite(val)[:, None], g, 0.0)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        psi = np.clip(psi + settings.lr * mhat / (np.sqrt(vhat) + eps), lo, hi)
    val, _ = lml_and_grad(kernel, psi, data, settings.jitter, with_prior=True)
    improved = val > best_val
    best_val[improved] = val[improved]
    best_psi[improved] = psi[improved]

    order = np.argsort(-best_val, kind="stable")
    for b in order:
        if not np.isfinite(best_val[b]):
            break
        try:
            return GpModel(kernel, best_psi[b, :-1], float(math.exp(best_psi[b, -1])), data, settings.jitter)
        except GpNumericError:
            continue
    raise GpNumericError("no restart produced a factorizable covariance")
