"""Numeric backend selection.

The compiled extension is preferred when importable; the pure-numpy twin in
_kernels_py is the fallback. Setting ADAPTIVE_KURAMOTO_BACKEND=python forces
the fallback (used by the benchmark and for debugging). Both backends share
one API and produce matching results to rounding.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels_cy as _impl  # type: ignore[attr-defined]
except ImportError:
    _impl = _kernels_py

if os.environ.get("ADAPTIVE_KURAMOTO_BACKEND", "").strip().lower() == "python":
    _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME
integrate_network = _impl.integrate_network
torus_sweep = _impl.torus_sweep


def thread_count() -> int:
    """Torus-sweep worker threads from ADAPTIVE_KURAMOTO_THREADS; 0 means
    let the OpenMP runtime decide (the numpy backend is single-threaded)."""
    raw = os.environ.get("ADAPTIVE_KURAMOTO_THREADS", "0")
    try:
        return max(0, int(raw))
    except ValueError:
        return 0
