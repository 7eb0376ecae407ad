"""Numba switch.

Hot kernels are written once as plain scalar Python and compiled with
``numba.njit`` when available. Setting ``EDMIMO_PURE_NUMPY=1`` in the
environment (before import) disables compilation; the kernels then run as
ordinary Python and the Monte Carlo engine switches to its vectorised numpy
path.
"""

import logging
import os
import warnings

log = logging.getLogger(__name__)

_FLAG = os.environ.get("EDMIMO_PURE_NUMPY", "").strip().lower()
PURE_NUMPY = _FLAG not in ("", "0", "false", "no")

try:
    if PURE_NUMPY:
        raise ImportError("disabled by EDMIMO_PURE_NUMPY")
    import numba

    HAVE_NUMBA = True
    # an old system TBB only makes numba fall back to another threading layer
    warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)
except ImportError:
    numba = None
    HAVE_NUMBA = False


def jit(func=None, *, parallel=False):
    """``numba.njit(cache=True)`` or the identity, depending on the switch."""

    def wrap(f):
        if not HAVE_NUMBA:
            return f
        return numba.njit(cache=True, nogil=True, parallel=parallel)(f)

    if func is None:
        return wrap
    return wrap(func)


if HAVE_NUMBA:
    prange = numba.prange
else:
    prange = range


def max_threads():
    if HAVE_NUMBA:
        return int(numba.config.NUMBA_NUM_THREADS)
    return os.cpu_count() or 1


def resolve_threads(threads=None):
    """Thread count from the argument, then ED_THREADS, then 1."""
    if threads is None:
        env = os.environ.get("ED_THREADS")
        threads = int(env) if env else 1
    threads = max(1, int(threads))
    return threads


def set_kernel_threads(threads):
    """Apply a thread count to numba's pool, clamped to its launch size."""
    if not HAVE_NUMBA:
        return threads
    cap = max_threads()
    if threads > cap:
        log.warning("requested %d threads, numba pool has %d (set NUMBA_NUM_THREADS)", threads, cap)
        threads = cap
    numba.set_num_threads(threads)
    return threads


def backend_name():
    return "numba" if HAVE_NUMBA else "numpy"
