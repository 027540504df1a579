"""Kernel backend selection.

The compiled extension (sitquery.kernels._cy) is preferred when importable;
otherwise the pure-Python reference takes over. SITQUERY_KERNELS=py forces
the fallback, SITQUERY_KERNELS=c makes a missing extension a hard error.
Both backends are kept operation-identical, so the choice never changes
results, only speed.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE = os.environ.get("SITQUERY_KERNELS", "auto").strip().lower()

if _FORCE == "py":
    from sitquery.kernels import pyref as _impl

    _BACKEND = "python"
else:
    try:
        from sitquery.kernels import _cy as _impl  # type: ignore[attr-defined]

        _BACKEND = "cython"
    except ImportError:
        if _FORCE == "c":
            raise
        from sitquery.kernels import pyref as _impl

        _BACKEND = "python"


def backend() -> str:
    """Name of the active backend: "cython" or "python"."""
    return _BACKEND


def _as_matrix(arr) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out.ndim == 1:
        out = out.reshape(1, -1)
    return out


def pairwise_dots(a, b) -> np.ndarray:
    """Row-by-row dot products; for unit vectors these are cosine similarities."""
    a = _as_matrix(a)
    b = _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.empty((a.shape[0], b.shape[0]), dtype=np.float64)
    return np.asarray(_impl.pairwise_dots(a, b))


def linkage_average(dist) -> list[tuple[int, int, float]]:
    """Average-linkage merge sequence for a full (n, n) distance matrix."""
    dist = _as_matrix(dist)
    if dist.shape[0] != dist.shape[1]:
        raise ValueError(f"distance matrix must be square, got {dist.shape}")
    return list(_impl.linkage_average(dist))
