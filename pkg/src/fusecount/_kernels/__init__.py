"""Kernel backend selection.

The compiled extension is preferred; the NumPy fallback is used when the
extension was not built or when FUSECOUNT_PURE=1 is set.  Both expose the
same three functions with identical numerics:

    splat_min_depth(u, v, z, radii, width, height) -> float32 grid
    splat_winner(u, v, z, radii, payload, width, height) -> (depth, label)
    dbscan_labels(points, eps, min_pts) -> int32 labels (-1 noise)
"""

from __future__ import annotations

import os

from . import pure

if os.environ.get("FUSECOUNT_PURE", "") not in ("", "0"):
    _impl = pure
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = "native" if _impl is not pure else "pure"

splat_min_depth = _impl.splat_min_depth
splat_winner = _impl.splat_winner
dbscan_labels = _impl.dbscan_labels


def backend() -> str:
    """Name of the active kernel backend: 'native' or 'pure'."""
    return BACKEND
