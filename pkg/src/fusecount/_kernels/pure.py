"""NumPy fallback for the rasterization and clustering kernels.

Produces bit-identical results to the compiled backend in
``fusecount._kernels._native``; only the speed differs.  The hot loops
here are expressed as flattened splat expansions plus unbuffered ufunc
updates, which is the fastest pure-NumPy formulation but still roughly
an order of magnitude slower than the C loops.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _disc_offsets(radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer (dy, dx) offsets of the filled disc dy^2 + dx^2 <= radius^2."""
    r = int(radius)
    span = np.arange(-r, r + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    keep = dy * dy + dx * dx <= r * r
    return dy[keep].copy(), dx[keep].copy()


def _expand_splats(u, v, radii, width, height):
    """Expand per-point discs into (flat_pixel_index, point_index) pairs.

    Disc pixels falling outside the frame are dropped; points whose whole
    disc is out of frame contribute nothing.
    """
    flat_parts = []
    pidx_parts = []
    for r in np.unique(radii):
        sel = np.flatnonzero(radii == r)
        dy, dx = _disc_offsets(int(r))
        ys = v[sel][:, None] + dy[None, :]
        xs = u[sel][:, None] + dx[None, :]
        ok = (ys >= 0) & (ys < height) & (xs >= 0) & (xs < width)
        pid = np.broadcast_to(sel[:, None], ys.shape)
        flat_parts.append((ys[ok].astype(np.int64) * width + xs[ok]))
        pidx_parts.append(pid[ok])
    if not flat_parts:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(flat_parts), np.concatenate(pidx_parts)


def splat_min_depth(u, v, z, radii, width, height):
    """Rasterize points as filled discs, keeping the minimum depth per pixel.

    Args:
        u, v: int32 pixel centers (may lie outside the frame).
        z: float32 positive depths, one per point.
        radii: int32 pixel radii (>= 1), one per point.
        width, height: frame size.

    Returns:
        (height, width) float32 grid, +inf where uncovered.
    """
    buf = np.full((height, width), np.inf, dtype=np.float32)
    flat, pidx = _expand_splats(u, v, radii, width, height)
    if flat.size:
        np.minimum.at(buf.ravel(), flat, z[pidx])
    return buf


def splat_winner(u, v, z, radii, payload, width, height):
    """Winner-takes-all rasterization: each pixel keeps the payload of its
    front-most covering point.

    Depth ties are broken by the lowest point index (matches the compiled
    backend, which processes points in order with a strict less-than test).

    Returns:
        (depth, label): float32 min-depth grid (+inf uncovered) and int32
        payload grid (0 where uncovered).
    """
    depth = np.full((height, width), np.inf, dtype=np.float32)
    label = np.zeros((height, width), dtype=np.int32)
    flat, pidx = _expand_splats(u, v, radii, width, height)
    if flat.size:
        order = np.lexsort((pidx, z[pidx]))
        flat = flat[order]
        pidx = pidx[order]
        first = np.unique(flat, return_index=True)[1]
        depth.ravel()[flat[first]] = z[pidx[first]]
        label.ravel()[flat[first]] = payload[pidx[first]]
    return depth, label


_CELL_BITS = 21
_CELL_BIAS = 1 << (_CELL_BITS - 1)


def _cell_keys(points: np.ndarray, eps: float) -> np.ndarray:
    """Pack per-point voxel coordinates (cell size eps) into int64 keys."""
    q = np.floor(points / eps).astype(np.int64)
    if np.any(np.abs(q) >= _CELL_BIAS - 1):
        raise ValueError("point extent too large for the voxel grid (scale/eps)")
    q += _CELL_BIAS
    return (q[:, 0] << (2 * _CELL_BITS)) | (q[:, 1] << _CELL_BITS) | q[:, 2]


def _neighbor_pairs(points: np.ndarray, eps: float):
    """Yield chunks of candidate index pairs (a, b) with |p_a - p_b| <= eps.

    Includes the self pair (a, a).  Pairs are produced by scanning the 27
    adjacent voxel cells; each chunk is distance-filtered already.
    """
    n = len(points)
    keys = _cell_keys(points, eps)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    uniq, starts = np.unique(sorted_keys, return_index=True)
    ends = np.append(starts[1:], n)
    eps2 = eps * eps

    offsets = [
        (dx << (2 * _CELL_BITS)) | (dy << _CELL_BITS) | dz
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
    ]
    for off in offsets:
        pos = np.searchsorted(uniq, keys + off)
        pos_ok = pos < len(uniq)
        hit = np.zeros(n, dtype=bool)
        hit[pos_ok] = uniq[pos[pos_ok]] == (keys + off)[pos_ok]
        a_idx = np.flatnonzero(hit)
        if a_idx.size == 0:
            continue
        s = starts[pos[a_idx]]
        e = ends[pos[a_idx]]
        counts = e - s
        a_rep = np.repeat(a_idx, counts)
        b_pos = np.repeat(s, counts) + (
            np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        )
        b_rep = order[b_pos]
        d = points[a_rep] - points[b_rep]
        close = np.einsum("ij,ij->i", d, d) <= eps2
        yield a_rep[close], b_rep[close]


def dbscan_labels(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Density-based clustering labels, -1 for noise.

    Two-pass, order-independent formulation: core points are those with at
    least ``min_pts`` neighbors within ``eps`` (self included); clusters are
    the connected components of the core-core eps graph; each border point
    joins the cluster of its lowest-index core neighbor.  Raw cluster ids
    are arbitrary but the membership is fully deterministic.
    """
    n = len(points)
    labels = np.full(n, -1, dtype=np.int32)
    if n == 0:
        return labels

    counts = np.zeros(n, dtype=np.int64)
    for a, _ in _neighbor_pairs(points, eps):
        np.add.at(counts, a, 1)
    core = counts >= min_pts
    if not core.any():
        return labels

    parent = np.arange(n)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    border_core = np.full(n, n, dtype=np.int64)
    for a, b in _neighbor_pairs(points, eps):
        cc = core[a] & core[b]
        for x, y in zip(a[cc], b[cc]):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[max(rx, ry)] = min(rx, ry)
        bc = ~core[a] & core[b]
        np.minimum.at(border_core, a[bc], b[bc])

    roots = np.array([find(i) for i in range(n)])
    labels[core] = roots[core]
    has_border = border_core < n
    labels[has_border & ~core] = roots[border_core[has_border & ~core]]
    return labels
