"""numba shim.

Kernels are written once in numpy style and compiled with numba when it is
importable. Setting ``STARE_DISABLE_JIT=1`` in the environment skips
compilation entirely so the same source runs as plain numpy/Python.
"""

import os

_FLAG = os.environ.get("STARE_DISABLE_JIT", "").strip().lower()
JIT_DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:
    if JIT_DISABLED:
        raise ImportError("JIT disabled by STARE_DISABLE_JIT")
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or the identity decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def python_function(f):
    """Return the undecorated Python function behind a kernel."""
    return getattr(f, "py_func", f)
