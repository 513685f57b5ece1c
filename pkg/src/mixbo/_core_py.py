"""Pure numpy implementation of the kernel hot loops.

Both entry points take signed coordinate differences ``R`` of shape
``(D, n1, n2)`` and a batch of lengthscales ``ls`` of shape ``(B, D)``.
Derivatives are taken with respect to ``log(l_d)`` and to the difference
``x1_d - x2_d``.
"""
import numpy as np

SQRT5 = np.sqrt(5.0)


def dim_kernel_stack(R, ls, base, need_dlogl=True, need_ddelta=False):
    """Per-dimension unit-diagonal 1D kernels, shape ``(B, D, n1, n2)``."""
    R = np.asarray(R, dtype=float)
    ls = np.asarray(ls, dtype=float)
    L = ls[:, :, None, None]
    d = R[None]
    dlogl = ddelta = None
    if base == "matern52":
        u = SQRT5 * np.abs(d) / L
        e = np.exp(-u)
        k = (1.0 + u + u * u / 3.0) * e
        if need_dlogl or need_ddelta:
            g = (1.0 + u) * e
            if need_dlogl:
                dlogl = (u * u / 3.0) * g
            if need_ddelta:
                ddelta = -(5.0 / 3.0) * d / (L * L) * g
    elif base == "rbf":
        s = d * d / (L * L)
        k = np.exp(-0.5 * s)
        if need_dlogl:
            dlogl = s * k
        if need_ddelta:
            ddelta = -d / (L * L) * k
    else:
        raise ValueError(f"unknown base kernel {base!r}")
    return k, dlogl, ddelta


def joint_ard(R, ls, base, need_dlogl=True, need_ddelta=False):
    """Stationary ARD kernel on the scaled Euclidean distance, shape ``(B, n1, n2)``."""
    R = np.asarray(R, dtype=float)
    ls = np.asarray(ls, dtype=float)
    L = ls[:, :, None, None]
    d = R[None]
    s = d * d / (L * L)
    r2 = s.sum(axis=1)
    dlogl = ddelta = None
    if base == "matern52":
        u = SQRT5 * np.sqrt(r2)
        e = np.exp(-u)
        k = (1.0 + u + u * u / 3.0) * e
        g = ((5.0 / 3.0) * (1.0 + u) * e)[:, None]
    elif base == "rbf":
        k = np.exp(-0.5 * r2)
        g = k[:, None]
    else:
        raise ValueError(f"unknown base kernel {base!r}")
    if need_dlogl:
        dlogl = g * s
    if need_ddelta:
        ddelta = -g * d / (L * L)
    return k, dlogl, ddelta
