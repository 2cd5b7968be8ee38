"""Build the optional Cython kernels.

The package works without them (``polyfield._kernels_py`` is used instead),
so a missing compiler or Cython only produces a warning.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("POLYFIELD_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "polyfield._kernels",
                    ["src/polyfield/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError as exc:  # pragma: no cover
        print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
