"""Numba switch.

Set ``LEVYOP_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba is
missing the numpy path is used automatically.
"""
import os

_FLAG = os.environ.get("LEVYOP_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    Kernels compiled through this shim are still importable on machines without
    numba; whether they are *selected* is decided by ``USE_NUMBA``.
    """
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def backend():
    return "numba" if USE_NUMBA else "numpy"
