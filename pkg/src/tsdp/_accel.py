"""Numba switch shared by all hot kernels.

Set ``TSDP_DISABLE_NUMBA=1`` before import to run every kernel through its
plain Python / NumPy fallback.
"""
import os

_FLAG = os.environ.get("TSDP_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

USE_NUMBA = _numba is not None and not DISABLED


def jit(fn):
    """Compile ``fn`` with ``numba.njit(cache=True)`` when enabled.

    The undecorated function stays reachable as ``.py_func`` in both modes
    so benchmarks can time the two paths side by side.
    """
    if USE_NUMBA:
        return _numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn


def resolve(use_numba):
    """Turn a per-call ``use_numba`` override into a concrete bool."""
    if use_numba is None:
        return USE_NUMBA
    return bool(use_numba) and _numba is not None
