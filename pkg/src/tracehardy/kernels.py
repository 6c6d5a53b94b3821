"""Select the kernel implementation at import time.

The compiled extension is used when it was built; otherwise the NumPy
fallback is loaded. Setting ``THL_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

_use_python = os.environ.get("THL_PURE_PYTHON", "").strip() not in ("", "0")

if _use_python:
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

gauss_series = _impl.gauss_series
ode_march = _impl.ode_march
IMPLEMENTATION = _impl.IMPLEMENTATION


def available():
    """Return the implementations that can be imported, name -> module."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
