"""Builds the compiled statistics kernels.

The package works without them (a numpy fallback is selected at import),
so a missing compiler degrades the install instead of failing it.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [Extension(
            "shiftreg._fast._stats",
            ["src/shiftreg/_fast/_stats.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )],
        language_level=3,
    )

setup(ext_modules=extensions)
