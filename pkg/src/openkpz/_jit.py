"""Numba switch.

Kernels decorated with :func:`jit` compile with numba unless the environment
variable ``OPENKPZ_DISABLE_NUMBA`` is set to a truthy value, in which case the
undecorated Python/numpy function runs instead. The flag is read once, at
import time.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("OPENKPZ_DISABLE_NUMBA", "").strip().lower()
NUMBA_ENABLED = numba is not None and _FLAG not in {"1", "true", "yes", "on"}


def jit(fn):
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn
