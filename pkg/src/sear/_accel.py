"""Backend selection for the hot kernels.

Set ``SEAR_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba as _numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("SEAR_DISABLE_NUMBA", "").strip().lower() in _FALSY


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if HAVE_NUMBA:
        from numba import njit as _njit
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)

    def wrap(fn):
        return fn
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap
