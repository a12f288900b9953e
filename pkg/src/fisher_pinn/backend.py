"""Kernel backend selection: numba-jitted kernels with a pure-numpy fallback.

The hot numerical kernels in :mod:`fisher_pinn.kernels` are written in a
numba-compatible numpy subset.  At import time they are either compiled with
``numba.njit`` or left as plain numpy functions, controlled by the
``FISHER_PINN_BACKEND`` environment variable:

    FISHER_PINN_BACKEND=numba   force numba (error if unavailable)
    FISHER_PINN_BACKEND=numpy   force the pure-numpy path
    unset / "auto"              numba if importable, else numpy

``benchmarks/benchmark_backends.py`` times both paths on the same kernels.
"""

import functools
import os

import numpy as np

_ENV_VAR = "FISHER_PINN_BACKEND"

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a wheel away
    numba = None
    HAS_NUMBA = False


def _resolve_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise ImportError(
                f"{_ENV_VAR}=numba requested but numba is not importable"
            )
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"{_ENV_VAR} must be 'numba', 'numpy' or 'auto', got {choice!r}")


BACKEND = _resolve_backend()


def using_numba() -> bool:
    return BACKEND == "numba"


def jit_kernel(func):
    """Compile ``func`` with numba on the numba backend, else run it as numpy.

    The numpy path suppresses overflow warnings: saturating ``exp`` overflow
    to ``inf`` is intentional in the sigmoid/analytic-solution tails and
    yields the correct limit values.
    """
    if using_numba():
        return numba.njit(cache=True, nogil=True)(func)

    @functools.wraps(func)
    def wrapper(*args):
        with np.errstate(over="ignore", under="ignore"):
            return func(*args)

    wrapper.py_func = func
    return wrapper


def jit_both(func):
    """Return (numpy_version, numba_version-or-None) of a kernel for benchmarks."""
    nb = numba.njit(cache=True, nogil=True)(func) if HAS_NUMBA else None
    return func, nb
