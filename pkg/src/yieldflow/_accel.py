"""Numba switch.

Hot kernels are written once as plain loops and compiled with ``numba.njit``
when numba is importable and ``YIELDFLOW_DISABLE_NUMBA`` is unset (or ``0``).
Every kernel also has a vectorized numpy twin; :mod:`yieldflow.kernels` picks
one of the two at import time.
"""

from __future__ import annotations

import os

_flag = os.environ.get("YIELDFLOW_DISABLE_NUMBA", "0").strip().lower()

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _flag in ("", "0", "false", "no")


def njit(func):
    """Compile ``func`` with numba if available, otherwise return it unchanged."""
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True, fastmath=False)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
