"""Optional numba acceleration.

Hot kernels are written once as plain Python loops and compiled with
``numba.njit`` when numba is importable and ``KINVAL_DISABLE_NUMBA`` is unset
(or ``0``). Every compiled kernel has a vectorized numpy twin; the dispatcher
in :mod:`kinval.kernels` picks one at import time.
"""

from __future__ import annotations

import os

_flag = os.environ.get("KINVAL_DISABLE_NUMBA", "0").strip().lower()
NUMBA_REQUESTED = _flag in ("", "0", "false", "no")

try:
    if not NUMBA_REQUESTED:
        raise ImportError("disabled by KINVAL_DISABLE_NUMBA")
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if HAS_NUMBA:
        import numba

        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"
