"""Builds the optional compiled stepping kernels.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed build is downgraded to a warning.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/kinetic_ergo/_kernels.pyx"],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
    include_dirs = [numpy.get_include()]
    for ext in ext_modules:
        ext.include_dirs = include_dirs
        ext.extra_compile_args = ["-O3"]
except Exception as exc:  # pragma: no cover
    print(f"warning: compiled kernels disabled ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
