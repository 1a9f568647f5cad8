"""Build script: compiles the fast core when Cython and a C compiler are
available, otherwise installs the pure-NumPy build."""

import sys

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("fdbench._core", ["src/fdbench/_core.pyx"])],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    print("fdbench: Cython unavailable at build time; installing without "
          "the compiled core", file=sys.stderr)

setup(ext_modules=ext_modules)
