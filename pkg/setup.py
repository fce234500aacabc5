"""Build the optional compiled water-filling core.

The package works without it; ``crspec._kernels`` falls back to the pure
Python implementation when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("CRSPEC_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:  # pragma: no cover
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "crspec._wfcore",
                    ["src/crspec/_wfcore.pyx"],
                    extra_compile_args=["-O3"],
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

setup(ext_modules=ext_modules)
