"""Numba switch for the hot kernels.

Set ``FMCI_DISABLE_NUMBA=1`` to force the pure-numpy / pure-python paths.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("FMCI_DISABLE_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is enabled, else return it as-is."""
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def njit_always(fn):
    """Compile regardless of the env flag (used by benchmarks and parity tests)."""
    if NUMBA_AVAILABLE:
        return numba.njit(cache=True)(fn)
    return fn
