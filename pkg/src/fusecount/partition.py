"""Two-phase spatial partitioning of the target cloud.

Phase one groups the cloud into spatially isolated superclusters with
density-based clustering (noise points are dropped entirely); phase two
splits each supercluster into K subclusters with seeded k-means.  Both
phases are deterministic: stable point order, seeded RNG, and an
order-independent clustering formulation in the kernel backends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .scene import PointCloud


@dataclass(frozen=True)
class Supercluster:
    """A spatially isolated group of target points; unit of independent
    downstream processing."""

    id: int
    points: PointCloud
    indices: np.ndarray  # indices into the original cloud

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)


@dataclass(frozen=True)
class Subcluster:
    """A k-means fragment of one supercluster; atomic unit of merging."""

    id: tuple[int, int]  # (supercluster id, local index)
    points: PointCloud
    centroid: np.ndarray
    indices: np.ndarray  # indices into the original cloud

    def __post_init__(self):
        c = np.asarray(self.centroid, dtype=np.float64).reshape(3)
        c.setflags(write=False)
        idx = np.asarray(self.indices, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "centroid", c)
        object.__setattr__(self, "indices", idx)


def dbscan_superclusters(cloud: PointCloud, eps: float,
                         min_points: int) -> list[Supercluster]:
    """Standard DBSCAN with Euclidean metric; noise is discarded.

    Core rule: a point is core iff at least min_points cloud points
    (itself included) lie within eps.  Border points reachable from two
    clusters join the one containing their lowest-index core neighbor.
    Output is ordered by each cluster's first point index.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_points < 1:
        raise ValueError("min_points must be at least 1")
    if len(cloud) == 0:
        return []

    raw = _kernels.dbscan_labels(cloud.points, float(eps), int(min_points))
    out: list[Supercluster] = []
    seen: dict[int, int] = {}
    for raw_id in raw:
        if raw_id >= 0 and raw_id not in seen:
            seen[int(raw_id)] = len(seen)
    for raw_id, new_id in seen.items():
        idx = np.flatnonzero(raw == raw_id)
        out.append(Supercluster(new_id, PointCloud(cloud.points[idx]), idx))
    return out


def kmeans_subclusters(supercluster: Supercluster, k: int,
                       seed: int) -> list[Subcluster]:
    """Partition a supercluster into min(k, n) non-empty subclusters.

    Lloyd's algorithm on 3D coordinates with k-means++ seeding driven by
    the given seed; empty clusters are repaired by reassigning the point
    farthest from the largest cluster's centroid; stops on a relative
    inertia change below 1e-6 or after 300 iterations.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    pts = supercluster.points.points
    n = len(pts)
    if n == 0:
        raise ValueError("supercluster is empty")
    k_eff = min(k, n)
    rng = np.random.default_rng(seed)

    centroids = _kmeans_pp_init(pts, k_eff, rng)
    assign = np.zeros(n, dtype=np.int64)
    prev_inertia = np.inf
    for _ in range(300):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)
        assign = _repair_empty(pts, centroids, assign, k_eff)
        inertia = 0.0
        for c in range(k_eff):
            sel = assign == c
            centroids[c] = pts[sel].mean(axis=0)
            inertia += float(((pts[sel] - centroids[c]) ** 2).sum())
        if prev_inertia - inertia <= 1e-6 * max(prev_inertia, 1e-300):
            break
        prev_inertia = inertia

    out = []
    for c in range(k_eff):
        sel = np.flatnonzero(assign == c)
        out.append(
            Subcluster(
                id=(supercluster.id, c),
                points=PointCloud(pts[sel]),
                centroid=pts[sel].mean(axis=0),
                indices=supercluster.indices[sel],
            )
        )
    return out


def _kmeans_pp_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(pts)
    centroids = np.empty((k, 3), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = pts[first]
    d2 = ((pts - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            # All remaining points coincide with a centroid; pick uniformly.
            choice = int(rng.integers(n))
        else:
            choice = int(rng.choice(n, p=d2 / total))
        centroids[c] = pts[choice]
        d2 = np.minimum(d2, ((pts - centroids[c]) ** 2).sum(axis=1))
    return centroids


def _repair_empty(pts, centroids, assign, k):
    """Give every empty cluster the farthest point of the largest cluster."""
    counts = np.bincount(assign, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        donor = int(np.argmax(counts))
        members = np.flatnonzero(assign == donor)
        d2 = ((pts[members] - centroids[donor]) ** 2).sum(axis=1)
        victim = members[int(np.argmax(d2))]
        assign[victim] = empty
        counts[donor] -= 1
        counts[empty] += 1
    return assign
