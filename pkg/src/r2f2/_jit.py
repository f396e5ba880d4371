"""numba switch.

Set ``R2F2_NUMBA=0`` to run every kernel as plain Python/numpy.  The flag is
read once at import time.
"""
import os

_flag = os.environ.get("R2F2_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:
    def jit(fn):
        return numba.njit(cache=True, nogil=True)(fn)
else:
    def jit(fn):
        return fn
