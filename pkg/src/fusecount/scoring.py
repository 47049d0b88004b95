"""Per-(subcluster, view) scores: visibility, mask consistency, label,
and reliability.

Visibility is the pixel-area ratio of the occlusion-aware footprint to
the occlusion-free footprint.  Consistency is the fraction of the
visible footprint covered by the single best-overlapping mask instance;
background never wins the argmax, so a missed detection scores zero
rather than matching the background region.  Reliability is their
product.  When a subcluster has no visible area in a view, all three
scores are zero and no label is assigned, so the pair contributes
nothing to affinity.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .partition import Subcluster
from .projection import DepthBuffer, Footprint, build_depth_buffer, visible_cover_grids
from .scene import Dataset, InstanceMask

NO_LABEL = -1


@dataclass(frozen=True)
class ViewScore:
    """Scores of one subcluster as seen from one view."""

    v: float
    c: float
    r: float
    label: Optional[int]


@dataclass(frozen=True)
class ScoreTable:
    """Dense (subcluster, view) score arrays for one supercluster.

    label holds NO_LABEL (-1) where no mask instance overlapped.
    """

    v: np.ndarray      # (m, n) float64
    c: np.ndarray      # (m, n) float64
    r: np.ndarray      # (m, n) float64
    label: np.ndarray  # (m, n) int32, NO_LABEL where absent

    @property
    def n_subclusters(self) -> int:
        return self.v.shape[0]

    @property
    def n_views(self) -> int:
        return self.v.shape[1]

    def get(self, i: int, j: int) -> ViewScore:
        lab = int(self.label[i, j])
        return ViewScore(
            v=float(self.v[i, j]),
            c=float(self.c[i, j]),
            r=float(self.r[i, j]),
            label=None if lab == NO_LABEL else lab,
        )


def visibility_score(occlusion_free: Footprint, visible: Footprint) -> float:
    """Visible-area fraction; zero when nothing projects into the frame."""
    if occlusion_free.area == 0:
        return 0.0
    return visible.area / occlusion_free.area


def consistency_score(visible: Footprint,
                      mask: InstanceMask) -> tuple[float, Optional[int]]:
    """Best single-instance overlap fraction of the visible footprint.

    Returns (c, label); label is None when the footprint is empty or only
    background overlaps.  Ties break to the smallest instance id.
    """
    if visible.area == 0:
        return 0.0, None
    ids = mask.labels.ravel()[visible.flat_indices()]
    counts = np.bincount(ids)
    if len(counts) <= 1 or counts[1:].max() == 0:
        return 0.0, None
    label = int(np.argmax(counts[1:])) + 1
    return int(counts[label]) / visible.area, label


def reliability_score(v: float, c: float) -> float:
    """Product of visibility and consistency; equals the direct ratio of
    best mask overlap to occlusion-free area."""
    return v * c


def build_score_table(subclusters: Sequence[Subcluster], dataset: Dataset,
                      radius: float, depth_tolerance: float,
                      env_buffers: Optional[Sequence[DepthBuffer]] = None,
                      workers: int = 1) -> ScoreTable:
    """Score every (subcluster, view) cell of one supercluster.

    env_buffers may carry precomputed per-view depth buffers of the
    occluder cloud; otherwise they are built here.  Cells are independent
    and the table is assembled in index order, so the result does not
    depend on worker scheduling.
    """
    m = len(subclusters)
    n = dataset.n_views
    v = np.zeros((m, n))
    c = np.zeros((m, n))
    r = np.zeros((m, n))
    label = np.full((m, n), NO_LABEL, dtype=np.int32)

    if env_buffers is None:
        env_buffers = build_env_buffers(dataset, radius, workers=workers)

    def score_view(j: int):
        view, mask = dataset.views[j]
        env_depth = env_buffers[j].depth
        col = np.zeros((m, 4))  # v, c, r, label per subcluster
        for i, sub in enumerate(subclusters):
            covered, visible = visible_cover_grids(
                view, sub.points.points, radius, env_depth, depth_tolerance
            )
            cov_area = int(covered.sum())
            if cov_area == 0:
                col[i] = (0.0, 0.0, 0.0, NO_LABEL)
                continue
            vis_area = int(visible.sum())
            vij = vis_area / cov_area
            if vis_area == 0:
                col[i] = (vij, 0.0, 0.0, NO_LABEL)
                continue
            counts = np.bincount(mask.labels[visible])
            if len(counts) <= 1 or counts[1:].max() == 0:
                col[i] = (vij, 0.0, vij * 0.0, NO_LABEL)
                continue
            lab = int(np.argmax(counts[1:])) + 1
            cij = int(counts[lab]) / vis_area
            col[i] = (vij, cij, vij * cij, lab)
        return col

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(score_view, range(n)))
    else:
        cols = [score_view(j) for j in range(n)]

    for j, col in enumerate(cols):
        v[:, j] = col[:, 0]
        c[:, j] = col[:, 1]
        r[:, j] = col[:, 2]
        label[:, j] = col[:, 3].astype(np.int32)
    return ScoreTable(v=v, c=c, r=r, label=label)


def build_env_buffers(dataset: Dataset, radius: float,
                      workers: int = 1) -> list[DepthBuffer]:
    """One occluder depth buffer per view, built once and shared read-only."""

    def build(j: int) -> DepthBuffer:
        view, _ = dataset.views[j]
        return build_depth_buffer(view, dataset.env_cloud, radius)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(build, range(dataset.n_views)))
    return [build(j) for j in range(dataset.n_views)]


def write_score_table(table: ScoreTable, path) -> None:
    """Debug dump: one row per (i, j) with i, j, v, c, r, label."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i\tj\tv\tc\tr\tlabel\n")
        for i in range(table.n_subclusters):
            for j in range(table.n_views):
                lab = int(table.label[i, j])
                fh.write(
                    f"{i}\t{j}\t{table.v[i, j]:.9g}\t{table.c[i, j]:.9g}\t"
                    f"{table.r[i, j]:.9g}\t{lab if lab != NO_LABEL else ''}\n"
                )
