"""Hot loops with two interchangeable backends.

The numba backend is used when numba imports cleanly, unless the environment
variable ``TRENDPARADOX_DISABLE_NUMBA`` is set to a truthy value, in which case
the pure-numpy twins in :mod:`._numpy` are used. Both backends take and return
the same arrays; results agree to floating-point rounding.
"""
import os

from . import _numpy

_FALSY = {"", "0", "false", "no", "off"}


def _numba_wanted():
    return os.environ.get("TRENDPARADOX_DISABLE_NUMBA", "").strip().lower() in _FALSY


BACKEND = "numpy"
_impl = _numpy

if _numba_wanted():
    try:
        from . import _numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass
    else:
        BACKEND = "numba"
        _impl = _numba

session_positions = _impl.session_positions
grouped_cumsum = _impl.grouped_cumsum
logistic_newton = _impl.logistic_newton

__all__ = ["BACKEND", "session_positions", "grouped_cumsum", "logistic_newton"]
