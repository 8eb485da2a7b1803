"""Build the optional compiled digit-walk core.

The package works without it (a NumPy fallback is selected at import time);
building the extension speeds up the orbit-heavy experiments several-fold:

    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

import numpy as np

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "sceneryflow._digitcore",
                sources=["src/sceneryflow/_digitcore.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no FMA contraction: results must match the NumPy fallback
                # bit for bit (IEEE mul then add, same order).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )

setup(ext_modules=extensions)
