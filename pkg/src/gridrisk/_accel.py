"""JIT switch.

Set ``GRIDRISK_DISABLE_JIT=1`` to run every kernel through the pure-numpy
path (useful for debugging and for the benchmark comparison). When numba
is missing the numpy path is used automatically.
"""
import os

_FLAG = os.environ.get("GRIDRISK_DISABLE_JIT", "").strip().lower()
JIT_REQUESTED = _FLAG not in ("1", "true", "yes", "on")

try:
    from numba import njit as _numba_njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False
    _numba_njit = None

JIT_ENABLED = JIT_REQUESTED and HAS_NUMBA


def njit(func=None, **kwargs):
    """``numba.njit`` that degrades to the identity decorator when numba is unavailable."""
    kwargs.setdefault("cache", True)
    if _numba_njit is None:
        if func is not None:
            return func
        return lambda f: f
    if func is not None:
        return _numba_njit(**kwargs)(func)
    return _numba_njit(**kwargs)
