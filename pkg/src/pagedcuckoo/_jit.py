"""JIT helper: compile hot kernels with numba when available.

Every kernel is plain Python operating on numpy arrays, so disabling the
JIT (numba missing, or PAGEDCUCKOO_NOJIT=1 for debugging) changes speed
only, never results.
"""

import os

HAVE_NUMBA = False

if not os.environ.get("PAGEDCUCKOO_NOJIT"):
    try:
        from numba import njit as _njit

        HAVE_NUMBA = True
    except ImportError:
        pass


def jitted(func):
    if HAVE_NUMBA:
        return _njit(cache=True)(func)
    return func


def jitted_inline(func):
    """For tiny leaf functions on the hot path."""
    if HAVE_NUMBA:
        return _njit(cache=True, inline="always")(func)
    return func
