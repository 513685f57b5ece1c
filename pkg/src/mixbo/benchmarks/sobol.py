"""Unscrambled Sobol points in Gray-code order with the all-zero point dropped.

Point ``i`` (1-based) XORs the direction numbers of the bits set in
``gray(i) = i ^ (i >> 1)``, so any index range can be generated without
walking the sequence from the start.
"""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

import numpy as np

BITS = 32
MAX_DIM = 16


class SobolError(ValueError):
    pass


@lru_cache(maxsize=1)
def _direction_table() -> dict[int, tuple[int, int, tuple[int, ...]]]:
    text = resources.files("mixbo.benchmarks").joinpath("data/sobol_directions.txt").read_text()
    table = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("d "):
            continue
        d, s, a, *m = (int(tok) for tok in line.split())
        if len(m) != s:
            raise SobolError(f"direction row for dim {d} has {len(m)} m-values, expected {s}")
        table[d] = (s, a, tuple(m))
    return table


@lru_cache(maxsize=None)
def direction_numbers(dim: int) -> np.ndarray:
    """``(dim, BITS)`` array of integer direction numbers ``v_k << (BITS - k)``."""
    if not 1 <= dim <= MAX_DIM:
        raise SobolError(f"Sobol dimension must be in 1..{MAX_DIM}, got {dim}")
    table = _direction_table()
    V = np.zeros((dim, BITS), dtype=np.uint64)
    V[0] = [1 << (BITS - k) for k in range(1, BITS + 1)]
    for d in range(2, dim + 1):
        s, a, m = table[d]
        mm = list(m)
        for k in range(s, BITS):
            new = mm[k - s] ^ (mm[k - s] << s)
            for j in range(1, s):
                if (a >> (s - 1 - j)) & 1:
                    new ^= mm[k - j] << j
            mm.append(new)
        V[d - 1] = [mm[k] << (BITS - 1 - k) for k in range(BITS)]
    return V


def sobol_points(dim: int, n: int, skip: int = 0) -> np.ndarray:
    """Points ``skip+1 .. skip+n`` of the sequence, shape ``(n, dim)`` in ``[0, 1)``."""
    if n < 0 or skip < 0:
        raise SobolError("n and skip must be non-negative")
    V = direction_numbers(dim)
    idx = np.arange(skip + 1, skip + n + 1, dtype=np.uint64)
    if n and int(idx[-1]) >= 1 << BITS:
        raise SobolError("index exceeds the 32-bit sequence length")
    gray = idx ^ (idx >> np.uint64(1))
    out = np.zeros((n, dim), dtype=np.uint64)
    for k in range(BITS):
        bit = ((gray >> np.uint64(k)) & np.uint64(1)).astype(bool)
        out[bit] ^= V[:, k]
    return out.astype(float) / float(1 << BITS)


def seed_skip(seed: int, n_total: int) -> int:
    """Offset that gives every seed its own stretch of the sequence."""
    return int(seed) * int(n_total)
