"""Pick the water-filling core: compiled extension if importable, else pure Python.

Set ``CRSPEC_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

from . import _wfcore_py

if os.environ.get("CRSPEC_PURE_PYTHON") == "1":
    core = _wfcore_py
else:
    try:
        from . import _wfcore as core
    except ImportError:  # extension not built
        core = _wfcore_py

BACKEND = core.BACKEND


def available_backends():
    names = ["python"]
    try:
        importlib.import_module("crspec._wfcore")
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_core(backend=None):
    """Return the kernel module for `backend` ("cython", "python" or None for the default)."""
    if backend is None:
        return core
    if backend == "python":
        return _wfcore_py
    if backend == "cython":
        return importlib.import_module("crspec._wfcore")
    raise ValueError(f"unknown backend {backend!r}")
