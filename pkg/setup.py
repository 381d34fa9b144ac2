"""Build the optional Cython kernels.

A missing compiler or Cython install is not fatal: the package falls back to
the numpy implementation in ``efo_fit._kernels_py`` at import time.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("EFO_FIT_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "efo_fit._kernels",
                    ["src/efo_fit/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # bitwise agreement with the numpy path needs strict IEEE ops
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
