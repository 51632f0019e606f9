"""Optional numba acceleration.

Set ``CONDAPPROVAL_NO_NUMBA=1`` to force the pure-numpy code paths. When numba
is not installed the numpy paths are used automatically.
"""

from __future__ import annotations

import os

try:
    import numba
    import numba.extending
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("CONDAPPROVAL_NO_NUMBA", "").strip().lower() not in (
    "1",
    "true",
    "yes",
)


def njit(func):
    """Compile ``func`` in nopython mode, or return it unchanged without numba."""
    if not NUMBA_AVAILABLE:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def jitable(func):
    """Keep ``func`` callable from Python and allow numba kernels to inline it."""
    if not NUMBA_AVAILABLE:
        return func
    return numba.extending.register_jitable(func)


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend
