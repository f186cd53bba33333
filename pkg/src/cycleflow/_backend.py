"""Kernel backend selection.

Hot loops are written once as plain scalar functions and compiled with
numba when it is available.  The environment variable CYCLEFLOW_BACKEND
overrides the choice:

    auto    use numba if importable, else fall back to numpy (default)
    numba   require numba, raise if it cannot be imported
    numpy   never compile; run the interpreted / vectorised paths

Random-number kernels are the same source either way, and numba executes
``numpy.random.Generator`` methods with the identical stream, so results
are bit-for-bit reproducible across backends.
"""

import os

_ENV_VAR = "CYCLEFLOW_BACKEND"


def _resolve():
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            "%s must be one of auto, numba, numpy (got %r)" % (_ENV_VAR, choice)
        )
    if choice == "numpy":
        return False, None
    try:
        import numba
    except ImportError:
        if choice == "numba":
            raise
        return False, None
    return True, numba


USING_NUMBA, _numba = _resolve()

BACKEND_NAME = "numba" if USING_NUMBA else "numpy"


def compile_kernel(func):
    """Return ``func`` jitted when the numba backend is active, else as is."""
    if USING_NUMBA:
        return _numba.njit(cache=True)(func)
    return func
