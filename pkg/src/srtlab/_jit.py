"""Numba switch.

Set ``SRTLAB_DISABLE_JIT=1`` to run every kernel through its pure-numpy
fallback (useful for debugging and for the kernel benchmark). The flag is
read once, at import time.
"""

import os

_FLAG = os.environ.get("SRTLAB_DISABLE_JIT", "").strip().lower()
JIT_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

USE_NUMBA = numba is not None and not JIT_DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if numba is not None:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f
