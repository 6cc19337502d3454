"""Kernel backend selection.

The compiled extension is used when it was built; ``DIVTSP_PURE_PYTHON=1``
forces the pure-Python kernels (handy for debugging and for the benchmark).
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("DIVTSP_PURE_PYTHON", "") == "1":
    kernels = _pykernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:  # extension not built
        kernels = _pykernels

BACKEND = "python" if kernels is _pykernels else "cython"


def available_backends() -> dict:
    """All importable kernel modules, keyed by backend name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
