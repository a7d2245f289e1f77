"""Numba dispatch switch.

Hot kernels ship in two flavours: an ``@njit`` loop version and a pure
numpy version. ``USE_NUMBA`` picks which one the public names bind to at
import time. Set ``TITLEQ_DISABLE_NUMBA=1`` to force the numpy path (handy
for debugging, or on platforms without llvmlite).
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("TITLEQ_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True``; a no-op decorator without numba."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _numba_njit(*args, **kwargs)


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
