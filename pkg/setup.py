"""Build script: compiles the optional Cython kernel extension.

If Cython or a C compiler is unavailable the package still installs;
lrfk falls back to the pure-Python kernels at import time.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/lrfk/_kernels/_speed.pyx"],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
    include_dirs = [numpy.get_include()]
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"lrfk: skipping compiled kernels ({exc})", file=sys.stderr)
    include_dirs = []

setup(
    ext_modules=ext_modules,
    include_dirs=include_dirs,
)
