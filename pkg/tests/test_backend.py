import os
import subprocess
import sys

import numpy as np
import pytest

from mixbo import _backend, _core_py
from mixbo.gp import Dataset, GpModel
from mixbo.kernels import PRESETS, bind

from conftest import mixed_space, random_points

ext = pytest.importorskip("mixbo._core_ext")


@pytest.mark.parametrize("fn", ["dim_kernel_stack", "joint_ard"])
@pytest.mark.parametrize("base", ["matern52", "rbf"])
def test_compiled_core_matches_numpy(fn, base, rng):
    R = rng.standard_normal((3, 7, 5))
    R[:, 2, 3] = 0.0
    ls = rng.uniform(0.05, 3.0, (4, 3))
    a = getattr(_core_py, fn)(R, ls, base, True, True)
    b = getattr(ext, fn)(R, ls, base, True, True)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("fn", ["dim_kernel_stack", "joint_ard"])
def test_optional_outputs(fn, rng):
    R = rng.standard_normal((2, 4, 4))
    ls = rng.uniform(0.1, 1.0, (1, 2))
    k, dl, dd = getattr(ext, fn)(R, ls, "matern52", False, False)
    assert dl is None and dd is None
    assert np.allclose(k, getattr(_core_py, fn)(R, ls, "matern52", False, False)[0], rtol=1e-13)


def test_unknown_base(rng):
    R = rng.standard_normal((1, 2, 2))
    for mod in (_core_py, ext):
        with pytest.raises(ValueError):
            mod.dim_kernel_stack(R, np.ones((1, 1)), "cubic")


@pytest.mark.parametrize("preset", sorted(PRESETS))
def test_posterior_agrees_across_backends(preset, rng, monkeypatch):
    sp = mixed_space()
    try:
        kern = bind(preset, sp)
    except ValueError:
        pytest.skip("preset does not support this space")
    X = random_points(sp, 9, rng)
    T = random_points(sp, 6, rng)
    data = Dataset(X, rng.standard_normal(9))
    m = GpModel.from_hp(kern, kern.default_hp(1e-3), data)
    a = m.posterior(T)
    monkeypatch.setattr(_backend, "dim_kernel_stack", _core_py.dim_kernel_stack)
    monkeypatch.setattr(_backend, "joint_ard", _core_py.joint_ard)
    m2 = GpModel.from_hp(kern, kern.default_hp(1e-3), data)
    b = m2.posterior(T)
    assert np.allclose(a.mean, b.mean, rtol=1e-10, atol=1e-12)
    assert np.allclose(a.var, b.var, rtol=1e-10, atol=1e-12)


def test_pure_python_switch():
    env = {**os.environ, "MIXBO_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "import mixbo; print(mixbo.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
