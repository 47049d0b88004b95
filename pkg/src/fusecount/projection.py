"""Software rasterization of point sets into pixel footprints.

Points are splatted as filled discs whose pixel radius is the world
splat radius scaled by fx/depth (floor 1), which closes the holes left
by point sampling.  "Area" always means covered-pixel count, so the
visibility ratio downstream is a ratio of set cardinalities.
Occlusion is resolved with a per-view minimum-depth buffer; a point
survives the depth test within a tolerance of 2x the splat radius by
default, which suppresses self-occlusion speckle among points of the
same surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .scene import CameraView, PointCloud, project_points


@dataclass(frozen=True)
class DepthBuffer:
    """Per-pixel minimum depth for one view; +inf where nothing splats."""

    depth: np.ndarray  # (height, width) float32

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float32)
        if d.ndim != 2:
            raise ValueError("depth grid must be 2D")
        object.__setattr__(self, "depth", d)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


class Footprint:
    """Set of in-bounds pixels covered by a projected point set."""

    __slots__ = ("pixels", "_shape")

    def __init__(self, pixels: np.ndarray, shape: tuple[int, int]):
        px = np.asarray(pixels, dtype=np.int32).reshape(-1, 2)
        self.pixels = px            # (k, 2) as (x, y), lexicographically sorted
        self._shape = shape         # (height, width)

    @classmethod
    def from_grid(cls, covered: np.ndarray) -> "Footprint":
        ys, xs = np.nonzero(covered)
        px = np.stack([xs, ys], axis=1).astype(np.int32)
        return cls(px, covered.shape)

    @property
    def area(self) -> int:
        return int(self.pixels.shape[0])

    def grid(self) -> np.ndarray:
        """Boolean (height, width) coverage grid."""
        g = np.zeros(self._shape, dtype=bool)
        g[self.pixels[:, 1], self.pixels[:, 0]] = True
        return g

    def flat_indices(self) -> np.ndarray:
        """Row-major flat pixel indices (for fast mask lookups)."""
        return self.pixels[:, 1].astype(np.int64) * self._shape[1] + self.pixels[:, 0]

    def pixel_set(self) -> set[tuple[int, int]]:
        return {(int(x), int(y)) for x, y in self.pixels}


def estimate_point_radius(cloud: PointCloud, sample_size: int = 1000,
                          seed: int = 0) -> float:
    """World-space splat radius: median nearest-neighbor distance over a
    seeded sample of the cloud.

    Raises ValueError for clouds with fewer than two points.
    """
    pts = cloud.points
    n = len(pts)
    if n < 2:
        raise ValueError("radius estimation needs at least 2 points")
    rng = np.random.default_rng([seed, 5])
    if n <= sample_size:
        queries = np.arange(n)
    else:
        queries = rng.choice(n, size=sample_size, replace=False)
        queries.sort()
    return float(np.median(_nn_distances(pts, queries)))


def _nn_distances(pts: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Nearest-other-neighbor distance for each query index, via a uniform
    grid with expanding-ring search."""
    lo = pts.min(axis=0)
    span = float((pts.max(axis=0) - lo).max())
    n = len(pts)
    cell = span / max(1.0, n ** (1 / 3)) + 1e-12
    if cell <= 0:
        return np.zeros(len(queries))
    coords = np.floor((pts - lo) / cell).astype(np.int64)
    cells: dict[tuple[int, int, int], list[int]] = {}
    for i, key in enumerate(map(tuple, coords)):
        cells.setdefault(key, []).append(i)

    # After scanning the Chebyshev shell at distance k, every unscanned
    # point lies at least k * cell away, so the search stops as soon as
    # best <= ring * cell.  max_ring bounds the loop when the grid runs out.
    max_ring = int(span / cell) + 2
    out = np.empty(len(queries))
    for qi, q in enumerate(queries):
        cq = coords[q]
        best = np.inf
        for ring in range(max_ring + 1):
            for dx in range(-ring, ring + 1):
                for dy in range(-ring, ring + 1):
                    for dz in range(-ring, ring + 1):
                        if max(abs(dx), abs(dy), abs(dz)) != ring:
                            continue
                        bucket = cells.get((cq[0] + dx, cq[1] + dy, cq[2] + dz))
                        if not bucket:
                            continue
                        idx = np.array(bucket)
                        idx = idx[idx != q]
                        if idx.size:
                            d = np.linalg.norm(pts[idx] - pts[q], axis=1)
                            best = min(best, float(d.min()))
            if best <= ring * cell:
                break
        out[qi] = best
    return out


def pixel_radii(view: CameraView, z: np.ndarray, radius: float) -> np.ndarray:
    """Per-point disc radius in pixels: max(1, round(fx * radius / depth))."""
    r = np.floor(view.fx * radius / z + 0.5).astype(np.int32)
    return np.maximum(r, 1)


def _splat_inputs(view: CameraView, points: np.ndarray, radius: float):
    u, v, z = project_points(view, points)
    return u, v, z.astype(np.float32), pixel_radii(view, z, radius)


def splat_depth_grid(view: CameraView, cloud: PointCloud, radius: float) -> np.ndarray:
    """Minimum-depth grid of the cloud's splats (float32, +inf uncovered)."""
    u, v, z, pr = _splat_inputs(view, cloud.points, radius)
    return _kernels.splat_min_depth(u, v, z, pr, view.width, view.height)


def splat_footprint(view: CameraView, points: PointCloud, radius: float) -> Footprint:
    """Occlusion-free projection: union of in-bounds disc pixels over all
    points with positive depth."""
    if radius <= 0:
        raise ValueError("splat radius must be positive")
    grid = splat_depth_grid(view, points, radius)
    return Footprint.from_grid(np.isfinite(grid))


def build_depth_buffer(view: CameraView, occluders: PointCloud,
                       radius: float) -> DepthBuffer:
    """Splat every occluder point, keeping the minimum depth per pixel."""
    if radius <= 0:
        raise ValueError("splat radius must be positive")
    return DepthBuffer(splat_depth_grid(view, occluders, radius))


def visible_footprint(view: CameraView, subcluster: PointCloud,
                      buffer: DepthBuffer, radius: float,
                      depth_tolerance: float | None = None) -> Footprint:
    """Occlusion-aware projection against a prebuilt depth buffer.

    A point's disc pixels survive iff the point's depth is within
    depth_tolerance (default 2 * radius) of the buffer depth there.  The
    buffer must include the subcluster itself among its occluders; a
    subcluster can never occlude its own front surface, so this is
    equivalent to testing the subcluster's own min-depth grid against the
    buffer pixelwise.
    """
    if radius <= 0:
        raise ValueError("splat radius must be positive")
    tol = 2.0 * radius if depth_tolerance is None else depth_tolerance
    own = splat_depth_grid(view, subcluster, radius)
    visible = np.isfinite(own) & (own <= buffer.depth.astype(np.float64) + tol)
    return Footprint.from_grid(visible)


def visible_cover_grids(view: CameraView, points: np.ndarray, radius: float,
                        env_depth: np.ndarray, tol: float):
    """Fast path for the scoring loop: (covered, visible) boolean grids.

    covered is the occlusion-free footprint grid; visible additionally
    passes the depth test against env_depth (occluders plus self, per the
    equivalence documented in visible_footprint).
    """
    own = splat_depth_grid(view, PointCloud(points), radius)
    covered = np.isfinite(own)
    visible = covered & (own <= env_depth.astype(np.float64) + tol)
    return covered, visible
