"""Benchmark objectives, Sobol initialization and ground-truth optima."""
from __future__ import annotations

import re

from .butternut import BsVariant, all_variants, bs_raw
from .dust import DustBenchmark, load_dust
from .sobol import sobol_points
from .truth import Optimum, brute_force_optimum

_BS_NAME = re.compile(r"^bs_(\d)d_(ci|id|ii|dd)$")


class UnknownBenchmark(KeyError):
    pass


def get_benchmark(name: str):
    """``bs_<dim>d_<family>``, ``dust1`` or ``dust2``."""
    m = _BS_NAME.match(name)
    if m:
        try:
            return BsVariant(int(m.group(1)), m.group(2))
        except ValueError as exc:
            raise UnknownBenchmark(name) from exc
    if name.lower() in ("dust1", "dust2"):
        return load_dust(name)
    raise UnknownBenchmark(name)


def benchmark_names() -> list[str]:
    return [v.name for v in all_variants()] + ["dust1", "dust2"]


__all__ = [
    "BsVariant", "DustBenchmark", "Optimum", "UnknownBenchmark", "all_variants", "benchmark_names",
    "brute_force_optimum", "bs_raw", "get_benchmark", "load_dust", "sobol_points",
]
