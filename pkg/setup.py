"""Builds the optional compiled pivoting kernel.

If Cython or a C compiler is missing the package installs without it and
falls back to the numpy kernel at import time.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("SETTRIG_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("settrig._simplex_ext", ["src/settrig/_simplex_ext.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3", "boundscheck": False,
                                 "wraparound": False},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
