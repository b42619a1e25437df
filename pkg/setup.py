"""Build script for the optional compiled event-scatter core.

The package works without the extension (a numpy fallback is selected at
import time), so a missing compiler only costs speed, not functionality.
Build in place for development with:

    python setup.py build_ext --inplace
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "aeqsim.kernels._ckernels",
                ["src/aeqsim/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError as exc:
    print(f"aeqsim: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
