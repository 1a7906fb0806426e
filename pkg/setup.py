"""Build the optional compiled kernels.

Set BERNET_NO_EXT=1 to skip the extension; the package then runs on its
numpy fallback.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("BERNET_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "bernet._kernels",
                    ["src/bernet/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # no fast-math: region membership must round exactly like numpy
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
