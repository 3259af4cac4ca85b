"""Numba dispatch.

Hot kernels exist twice: a ``@njit`` version and a pure-numpy version.  The
numba path is used when numba imports and ``DYNMLN_NO_JIT`` is unset (or
``0``).  Set ``DYNMLN_NO_JIT=1`` to force the numpy path.
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("DYNMLN_NO_JIT", "0") in ("", "0")


def njit(*args, **kwargs):
    """``numba.njit`` with caching on; identity decorator when numba is absent."""
    kwargs.setdefault("cache", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
