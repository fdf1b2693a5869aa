"""Numba dispatch shim.

Hot kernels come in two flavours: an explicit-loop version that is compiled
with ``numba.njit`` and a vectorised numpy version.  Set the environment
variable ``HANKEL_MRA_DISABLE_NUMBA=1`` (before import) to force the numpy
path everywhere.
"""

import os

_flag = os.environ.get("HANKEL_MRA_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and _flag not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if NUMBA_AVAILABLE:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def decorator(func):
        return func

    if len(args) == 1 and callable(args[0]):
        return args[0]
    return decorator


def backend():
    return "numba" if USE_NUMBA else "numpy"
