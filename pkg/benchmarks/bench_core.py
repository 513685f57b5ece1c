"""Time the kernel core backends and one GP fit on a typical problem size.

    python benchmarks/bench_core.py [--n 60] [--dims 4] [--repeat 20]
"""
import argparse
import time

import numpy as np

from mixbo import _core_py
from mixbo.benchmarks import get_benchmark
from mixbo.gp import Dataset, FitSettings, fit_map

try:
    from mixbo import _core_ext
except ImportError:
    _core_ext = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--dims", type=int, default=4)
    ap.add_argument("--batch", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    X = rng.random((args.n, args.dims))
    R = X.T[:, :, None] - X.T[:, None, :]
    ls = rng.uniform(0.1, 1.0, (args.batch, args.dims))
    backends = {"python": _core_py}
    if _core_ext is not None:
        backends["cython"] = _core_ext
    for name, mod in backends.items():
        for fn in ("dim_kernel_stack", "joint_ard"):
            t = best_of(lambda: getattr(mod, fn)(R, ls, "matern52", True, False), args.repeat)
            print(f"{name:<7} {fn:<17} {1e3 * t:8.3f} ms")

    bench = get_benchmark(f"bs_{args.dims}d_ci")
    U = rng.random((args.n, args.dims))
    Xn = bench.space.from_unit(U)
    y = np.array([bench(bench.space.denormalize(p)) for p in Xn])
    t = best_of(lambda: fit_map("BOSS_on_gam_Mat52", Dataset(Xn, y), bench.space, FitSettings()), 3)
    print(f"fit_map BOSS_on_gam_Mat52 n={args.n} d={args.dims}: {t:.3f} s")


if __name__ == "__main__":
    main()
