"""Select the compiled core when available, else the NumPy fallback.

Set ``MAXENERGY_PURE=1`` to force the fallback. ``MAXENERGY_THREADS`` caps the
number of OpenMP threads used by the compiled mat-vec.
"""
from __future__ import annotations

import os

from maxenergy import _purepy

if os.environ.get("MAXENERGY_PURE"):
    impl = _purepy
else:
    try:
        from maxenergy import _core as impl
    except ImportError:
        impl = _purepy

BACKEND: str = impl.BACKEND


def available_backends() -> dict:
    """All importable implementations keyed by name (for tests/benchmarks)."""
    out = {"python": _purepy}
    try:
        from maxenergy import _core

        out["cython"] = _core
    except ImportError:
        pass
    return out


def resolve_threads(threads: int | None = None) -> int:
    cap = os.environ.get("MAXENERGY_THREADS")
    n = threads if threads is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, int(cap))
    return max(1, int(n))
