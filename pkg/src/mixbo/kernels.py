"""Kernel formulations and presets for mixed spaces.

Two routes are provided. :func:`kernel_eval` is a scalar reference written
directly from the formulas; :class:`BoundKernel` is the vectorized, batched
implementation (with gradients) used by the GP. Tests pin one against the
other.

Lengthscales act on normalized coordinates. Categorical dimensions are handled
by a Hamming-type block ``exp(-sum_i w_i [a_i != b_i])``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend
from .priors import (
    GAMMA,
    LOGNORMAL,
    PriorSpec,
    dimension_lognormal,
    gamma_from_quantiles,
    output_scale_gamma,
    prior_dlog_density_dlogv,
    prior_log_density,
)
from .space import BINARY, INTEGER, SearchSpace

MATERN52 = "matern52"
RBF = "rbf"

PRODUCT = "product"
SUM = "sum"
ARD = "ard"
META = "meta"

LENGTHSCALE_QUANTILES = (0.05, 0.5)


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    name: str
    base: str = MATERN52
    composition: str = PRODUCT
    scale_mode: str = "free"
    lengthscale_prior: str = "none"
    scale_prior: str = "none"
    rounding: str = "off"

    def __post_init__(self):
        if self.base not in (MATERN52, RBF):
            raise KernelError(f"unknown base {self.base!r}")
        if self.composition not in (PRODUCT, SUM, ARD, META):
            raise KernelError(f"unknown composition {self.composition!r}")
        if self.scale_mode not in ("free", "fixed_one"):
            raise KernelError(f"unknown scale mode {self.scale_mode!r}")
        if self.lengthscale_prior not in ("none", GAMMA, LOGNORMAL):
            raise KernelError(f"unknown lengthscale prior {self.lengthscale_prior!r}")
        if self.scale_prior not in ("none", GAMMA):
            raise KernelError(f"unknown scale prior {self.scale_prior!r}")
        if self.rounding not in ("off", "kr"):
            raise KernelError(f"unknown rounding {self.rounding!r}")


PRESETS: dict[str, KernelSpec] = {
    s.name: s
    for s in [
        KernelSpec("meta_off", composition=META),
        KernelSpec("hvafner_fixed", composition=ARD, scale_mode="fixed_one", lengthscale_prior=LOGNORMAL),
        KernelSpec("KR_on_gam_Mat52", lengthscale_prior=GAMMA, scale_prior=GAMMA, rounding="kr"),
        KernelSpec("BOSS_off_RBF", base=RBF),
        KernelSpec("BOSS_off_Mat52"),
        KernelSpec("BOSS_off_Mat52_sum", composition=SUM),
        KernelSpec("BOSS_on_gam_Mat52", lengthscale_prior=GAMMA, scale_prior=GAMMA),
        KernelSpec("BOSS_on_LN_Mat52", lengthscale_prior=LOGNORMAL, scale_prior=GAMMA),
        KernelSpec("BOSS_on_gam_fixed_Mat52", scale_mode="fixed_one", lengthscale_prior=GAMMA),
    ]
}


def get_preset(name: str) -> KernelSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise KernelError(f"unknown kernel preset {name!r}; known: {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class HyperParams:
    lengthscales: np.ndarray
    cat_weights: np.ndarray
    scale: float
    noise: float
    scale_sum: float | None = None

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        cw = np.atleast_1d(np.asarray(self.cat_weights, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "cat_weights", cw)
        if np.any(ls <= 0) or np.any(cw <= 0) or not self.scale > 0 or not self.noise >= 0:
            raise KernelError("hyperparameters must be positive")
        if self.scale_sum is not None and not self.scale_sum > 0:
            raise KernelError("hyperparameters must be positive")


# --------------------------------------------------------------------------
# scalar reference route


def kernel_1d(base: str, lengthscale: float, r: float) -> float:
    if not lengthscale > 0:
        raise KernelError("lengthscale must be positive")
    if r < 0:
        raise KernelError("distance must be non-negative")
    if base == MATERN52:
        u = math.sqrt(5.0) * r / lengthscale
        return (1.0 + u + u * u / 3.0) * math.exp(-u)
    if base == RBF:
        return math.exp(-0.5 * (r / lengthscale) ** 2)
    raise KernelError(f"unknown base {base!r}")


def kernel_categorical(weights, a, b) -> float:
    weights, a, b = list(weights), list(a), list(b)
    if not (len(weights) == len(a) == len(b)):
        raise KernelError("categorical kernel inputs must have equal length")
    return math.exp(-sum(w * (ai != bi) for w, ai, bi in zip(weights, a, b)))


def _snap_to(anchors, u):
    return anchors[int(np.argmin(np.abs(anchors - u)))]


def kernel_eval(spec: KernelSpec, space: SearchSpace, hp: HyperParams, p, q) -> float:
    """k(p, q) for two normalized points, evaluated one term at a time."""
    num = [i for i, ps in enumerate(space.params) if ps.kind != "categorical"]
    cat = [i for i, ps in enumerate(space.params) if ps.kind == "categorical"]
    p = [float(v) for v in p]
    q = [float(v) for v in q]
    if spec.rounding == "kr":
        for i in num:
            if space.params[i].kind in (BINARY, INTEGER):
                anchors = space.params[i].anchors
                p[i] = _snap_to(anchors, p[i])
                q[i] = _snap_to(anchors, q[i])
    ls = hp.lengthscales
    scale = 1.0 if spec.scale_mode == "fixed_one" else hp.scale
    kc = kernel_categorical(hp.cat_weights, [p[i] for i in cat], [q[i] for i in cat]) if cat else None
    if spec.composition in (PRODUCT, SUM):
        parts = [kernel_1d(spec.base, ls[j], abs(p[i] - q[i])) for j, i in enumerate(num)]
        if kc is not None:
            parts.append(kc)
        if spec.composition == PRODUCT:
            return scale * math.prod(parts)
        return scale * math.fsum(parts)
    ka = None
    if num:
        r = math.sqrt(sum(((p[i] - q[i]) / ls[j]) ** 2 for j, i in enumerate(num)))
        ka = kernel_1d(spec.base, 1.0, r)
    blocks = [b for b in (ka, kc) if b is not None]
    if spec.composition == ARD:
        return scale * math.prod(blocks)
    return scale * math.prod(blocks) + hp.scale_sum * math.fsum(blocks)


# --------------------------------------------------------------------------
# vectorized route


@dataclass
class BoundKernel:
    """A kernel spec specialised to one search space.

    Kernel parameters are handled as a log-space vector ``phi`` laid out as
    ``[log lengthscales, log categorical weights, log scale, log scale_sum]``
    with the scale entries present only when free.
    """

    spec: KernelSpec
    space: SearchSpace
    num_idx: np.ndarray = field(init=False)
    cat_idx: np.ndarray = field(init=False)
    n_ls: int = field(init=False)
    n_cat: int = field(init=False)
    n_params: int = field(init=False)

    def __post_init__(self):
        self.num_idx = self.space.numeric_idx
        self.cat_idx = self.space.categorical_idx
        self.n_ls = len(self.num_idx)
        self.n_cat = len(self.cat_idx)
        self.free_scale = self.spec.scale_mode == "free"
        self.two_scales = self.spec.composition == META
        if self.two_scales and not self.free_scale:
            raise KernelError("meta composition needs free scales")
        self.n_params = self.n_ls + self.n_cat + (int(self.free_scale) + int(self.two_scales))
        if self.spec.rounding == "kr":
            if self.space.has("discrete", "categorical"):
                raise KernelError("kernel rounding supports continuous and integer dimensions only")
            if not self.space.has(BINARY, INTEGER):
                raise KernelError("kernel rounding needs at least one integer dimension")
        self._round = []
        if self.spec.rounding == "kr":
            for j, i in enumerate(self.num_idx):
                ps = self.space.params[i]
                if ps.kind in (BINARY, INTEGER):
                    self._round.append((j, i, ps.anchors))
        self._ls_prior = None
        if self.spec.lengthscale_prior == GAMMA:
            self._ls_prior = gamma_from_quantiles(*LENGTHSCALE_QUANTILES)
        elif self.spec.lengthscale_prior == LOGNORMAL:
            self._ls_prior = dimension_lognormal(self.space.dim)

    # -- parameter packing -------------------------------------------------

    @property
    def param_names(self) -> list[str]:
        names = [f"lengthscale[{self.space.params[i].name}]" for i in self.num_idx]
        names += [f"cat_weight[{self.space.params[i].name}]" for i in self.cat_idx]
        if self.free_scale:
            names.append("scale")
        if self.two_scales:
            names.append("scale_sum")
        return names

    def pack(self, hp: HyperParams) -> np.ndarray:
        parts = [np.log(hp.lengthscales), np.log(hp.cat_weights)]
        if self.free_scale:
            parts.append([math.log(hp.scale)])
        if self.two_scales:
            parts.append([math.log(hp.scale_sum)])
        return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])

    def unpack(self, phi, noise: float) -> HyperParams:
        phi = np.asarray(phi, dtype=float)
        ls = np.exp(phi[: self.n_ls])
        cw = np.exp(phi[self.n_ls : self.n_ls + self.n_cat])
        k = self.n_ls + self.n_cat
        # np.exp, not math.exp, so the values agree bit for bit with the batched path
        scale = float(np.exp(phi[k])) if self.free_scale else 1.0
        scale_sum = float(np.exp(phi[k + 1])) if self.two_scales else None
        return HyperParams(ls, cw, scale, noise, scale_sum)

    def default_hp(self, noise: float = 1e-3) -> HyperParams:
        ls = np.full(self.n_ls, 0.5 * math.sqrt(self.space.dim))
        return HyperParams(ls, np.ones(self.n_cat), 1.0, noise, 1.0 if self.two_scales else None)

    # -- evaluation ----------------------------------------------------------

    def round_inputs(self, X: np.ndarray) -> np.ndarray:
        if not self._round:
            return X
        X = np.array(X, dtype=float)
        for _, i, anchors in self._round:
            X[:, i] = anchors[np.argmin(np.abs(X[:, i : i + 1] - anchors[None, :]), axis=1)]
        return X

    def _scales(self, phi):
        k = self.n_ls + self.n_cat
        B = phi.shape[0]
        s = np.exp(phi[:, k]) if self.free_scale else np.ones(B)
        s2 = np.exp(phi[:, k + 1]) if self.two_scales else None
        return s, s2

    def matrices(self, X1, X2, phi, grad_params=False, grad_x=False):
        """Batched covariance between ``X1`` and ``X2``.

        Returns ``K`` of shape ``(B, n1, n2)``, the derivatives with respect
        to ``phi`` of shape ``(B, P, n1, n2)`` and the derivatives with respect
        to the coordinates of ``X1`` of shape ``(B, dim, n1, n2)``; the last two
        are None unless requested.
        """
        X1 = self.round_inputs(np.atleast_2d(np.asarray(X1, dtype=float)))
        X2 = self.round_inputs(np.atleast_2d(np.asarray(X2, dtype=float)))
        phi = np.atleast_2d(np.asarray(phi, dtype=float))
        B, n1, n2 = phi.shape[0], X1.shape[0], X2.shape[0]
        ls = np.exp(phi[:, : self.n_ls])
        scale, scale_sum = self._scales(phi)
        comp = self.spec.composition

        # categorical block
        kc = dkc = None
        if self.n_cat:
            w = np.exp(phi[:, self.n_ls : self.n_ls + self.n_cat])
            M = (X1[:, self.cat_idx][:, None, :] != X2[:, self.cat_idx][None, :, :]).astype(float)
            M = np.moveaxis(M, -1, 0)
            kc = np.exp(-np.einsum("bc,cij->bij", w, M))
            if grad_params:
                dkc = -w[:, :, None, None] * M[None] * kc[:, None]

        # numeric block
        kn = dkn = dxn = None
        if self.n_ls:
            R = X1[:, self.num_idx][:, None, :] - X2[:, self.num_idx][None, :, :]
            R = np.ascontiguousarray(np.moveaxis(R, -1, 0))
            if comp in (PRODUCT, SUM):
                kd, dkd, dxd = _backend.dim_kernel_stack(R, ls, self.spec.base, grad_params, grad_x)
                if comp == PRODUCT:
                    loo = _leave_one_out_products(kd)
                    kn = kd[:, 0] * loo[:, 0] if self.n_ls else None
                    if grad_params:
                        dkn = loo * dkd
                    if grad_x:
                        dxn = loo * dxd
                else:
                    kn = kd.sum(axis=1)
                    dkn, dxn = dkd, dxd
            else:
                kn, dkn, dxn = _backend.joint_ard(R, ls, self.spec.base, grad_params, grad_x)
            if grad_x and self._round:
                dxn = dxn.copy()
                for j, _, _ in self._round:
                    dxn[:, j] = 0.0

        P = self.n_params
        dK = np.zeros((B, P, n1, n2)) if grad_params else None
        dX = np.zeros((B, self.space.dim, n1, n2)) if grad_x else None
        ones = 1.0
        sl_ls = slice(0, self.n_ls)
        sl_cat = slice(self.n_ls, self.n_ls + self.n_cat)
        k_scale = self.n_ls + self.n_cat
        S = scale[:, None, None]

        if comp in (PRODUCT, ARD):
            a = kn if kn is not None else ones
            c = kc if kc is not None else ones
            base = a * c
            K = S * base
            if grad_params:
                if self.n_ls:
                    dK[:, sl_ls] = (S * c)[:, None] * dkn
                if self.n_cat:
                    dK[:, sl_cat] = (S * a)[:, None] * dkc
                if self.free_scale:
                    dK[:, k_scale] = K
            if grad_x and self.n_ls:
                dX[:, self.num_idx] = (S * c)[:, None] * dxn
        elif comp == SUM:
            base = np.zeros((B, n1, n2))
            if kn is not None:
                base = base + kn
            if kc is not None:
                base = base + kc
            K = S * base
            if grad_params:
                if self.n_ls:
                    dK[:, sl_ls] = S[:, None] * dkn
                if self.n_cat:
                    dK[:, sl_cat] = S[:, None] * dkc
                dK[:, k_scale] = K
            if grad_x and self.n_ls:
                dX[:, self.num_idx] = S[:, None] * dxn
        else:
            S2 = scale_sum[:, None, None]
            a = kn if kn is not None else ones
            c = kc if kc is not None else ones
            prod_block = a * c
            sum_block = np.zeros((B, n1, n2))
            if kn is not None:
                sum_block = sum_block + kn
            if kc is not None:
                sum_block = sum_block + kc
            K = S * prod_block + S2 * sum_block
            if grad_params:
                if self.n_ls:
                    dK[:, sl_ls] = (S * c + S2)[:, None] * dkn
                if self.n_cat:
                    dK[:, sl_cat] = (S * a + S2)[:, None] * dkc
                dK[:, k_scale] = S * prod_block
                dK[:, k_scale + 1] = S2 * sum_block
            if grad_x and self.n_ls:
                dX[:, self.num_idx] = (S * c + S2)[:, None] * dxn
        return K, dK, dX

    def prior_variance(self, phi) -> np.ndarray:
        """k(x, x) per batch entry; constant over inputs for every preset."""
        phi = np.atleast_2d(np.asarray(phi, dtype=float))
        scale, scale_sum = self._scales(phi)
        comp = self.spec.composition
        if comp == SUM:
            return scale * (self.n_ls + (1 if self.n_cat else 0))
        if comp == META:
            return scale + scale_sum * ((1 if self.n_ls else 0) + (1 if self.n_cat else 0))
        return scale

    def log_prior(self, phi, y_range: float):
        """Sum of prior log densities and its gradient with respect to ``phi``."""
        phi = np.atleast_2d(np.asarray(phi, dtype=float))
        B = phi.shape[0]
        lp = np.zeros(B)
        grad = np.zeros_like(phi)
        if self._ls_prior is not None and self.n_ls:
            ls = np.exp(phi[:, : self.n_ls])
            lp += prior_log_density(self._ls_prior, ls).sum(axis=1)
            grad[:, : self.n_ls] = prior_dlog_density_dlogv(self._ls_prior, ls)
        if self.spec.scale_prior == GAMMA and self.free_scale:
            prior = output_scale_gamma(y_range)
            if prior is not None:
                k = self.n_ls + self.n_cat
                s = np.exp(phi[:, k])
                lp += prior_log_density(prior, s)
                grad[:, k] = prior_dlog_density_dlogv(prior, s)
        return lp, grad

    @property
    def lengthscale_prior(self) -> PriorSpec | None:
        return self._ls_prior


def _leave_one_out_products(kd: np.ndarray) -> np.ndarray:
    """``out[:, d] = prod_{e != d} kd[:, e]`` without dividing."""
    D = kd.shape[1]
    prefix = np.empty_like(kd)
    suffix = np.empty_like(kd)
    prefix[:, 0] = 1.0
    suffix[:, D - 1] = 1.0
    for d in range(1, D):
        prefix[:, d] = prefix[:, d - 1] * kd[:, d - 1]
    for d in range(D - 2, -1, -1):
        suffix[:, d] = suffix[:, d + 1] * kd[:, d + 1]
    return prefix * suffix


def bind(spec: KernelSpec | str, space: SearchSpace) -> BoundKernel:
    if isinstance(spec, str):
        spec = get_preset(spec)
    return BoundKernel(spec, space)


def gram(spec: KernelSpec | str, space: SearchSpace, hp: HyperParams, points) -> np.ndarray:
    kern = bind(spec, space)
    X = np.atleast_2d(np.asarray(points, dtype=float))
    K, _, _ = kern.matrices(X, X, kern.pack(hp)[None])
    return K[0]


def with_scale(spec: KernelSpec, mode: str) -> KernelSpec:
    return replace(spec, scale_mode=mode)
