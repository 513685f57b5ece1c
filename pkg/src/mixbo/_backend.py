"""Select the kernel core at import: compiled extension if built, numpy otherwise.

Set ``MIXBO_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _core_py

BACKEND = "python"
core = _core_py

if os.environ.get("MIXBO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core_ext

        core = _core_ext
        BACKEND = "cython"
    except ImportError:
        pass

dim_kernel_stack = core.dim_kernel_stack
joint_ard = core.joint_ard
