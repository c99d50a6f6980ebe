"""Kernel backend selection.

Hot numeric kernels (Levenshtein alignment, per-speaker adaptive quadrature)
exist twice: a numba @njit build and a pure-numpy fallback.  The active
backend is chosen once per process from the WERFAIR_BACKEND environment
variable: "numba", "numpy", or "auto" (default; numba when importable).
"""

import os

_BACKEND_NAME = None
_KERNELS = None


def backend_name():
    global _BACKEND_NAME
    if _BACKEND_NAME is None:
        choice = os.environ.get("WERFAIR_BACKEND", "auto").strip().lower()
        if choice not in ("auto", "numba", "numpy"):
            raise ValueError(
                "WERFAIR_BACKEND must be 'auto', 'numba', or 'numpy', got %r" % choice
            )
        if choice == "numpy":
            _BACKEND_NAME = "numpy"
        else:
            try:
                import numba  # noqa: F401

                _BACKEND_NAME = "numba"
            except ImportError:
                if choice == "numba":
                    raise
                _BACKEND_NAME = "numpy"
    return _BACKEND_NAME


def get_kernels():
    """Return the active kernel module."""
    global _KERNELS
    if _KERNELS is None:
        if backend_name() == "numba":
            from . import _kernels_numba as kernels
        else:
            from . import _kernels_numpy as kernels
        _KERNELS = kernels
    return _KERNELS
