import os

from setuptools import Extension, setup


def ext_modules():
    if os.environ.get("MIXBO_PURE_PYTHON"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "mixbo._core_ext",
        [os.path.join("src", "mixbo", "_core_ext.pyx")],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=ext_modules())
