"""Selects the stop-sequence search backend at import time.

The compiled extension is used when it was built; set
``FLEET_DISPATCH_PURE=1`` to force the pure-Python implementation.
"""
import os

from . import _kernel_py

BACKENDS = {"python": _kernel_py.solve}

try:
    from . import _kernel
except ImportError:  # extension not built
    _kernel = None
else:
    BACKENDS["cython"] = _kernel.solve

if _kernel is not None and os.environ.get("FLEET_DISPATCH_PURE") != "1":
    BACKEND = "cython"
else:
    BACKEND = "python"

solve = BACKENDS[BACKEND]


def get(backend: str | None = None):
    if backend is None:
        return solve
    try:
        return BACKENDS[backend]
    except KeyError:
        raise ValueError(f"backend {backend!r} is not available; have {sorted(BACKENDS)}") from None
