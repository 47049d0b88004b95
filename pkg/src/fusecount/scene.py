"""Domain types for views, masks, point clouds, and datasets.

Camera convention: world-to-camera pose, camera frame +x right, +y down,
+z forward (points in front of the camera have positive z).  A 3D point
maps to exactly one integer pixel by rounding; sub-pixel coverage is the
projection module's business (splatting), not this one's.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

ORTHONORMAL_TOL = 1e-6


@dataclass(frozen=True)
class CameraView:
    """Pinhole intrinsics plus a world-to-camera pose for one view."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray    # (3, 3) world-to-camera
    translation: np.ndarray  # (3,) meters

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")
        rot = np.ascontiguousarray(np.asarray(self.rotation, dtype=np.float64))
        tr = np.ascontiguousarray(np.asarray(self.translation, dtype=np.float64)).reshape(3)
        if rot.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rot.shape}")
        if not np.isfinite(rot).all() or not np.isfinite(tr).all():
            raise ValueError("pose must be finite")
        rot.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    def rotation_error(self) -> float:
        """Max abs deviation of R R^T from identity plus determinant from +1."""
        r = self.rotation
        return max(
            float(np.abs(r @ r.T - np.eye(3)).max()),
            abs(float(np.linalg.det(r)) - 1.0),
        )

    def is_orthonormal(self, tol: float = ORTHONORMAL_TOL) -> bool:
        return self.rotation_error() <= tol

    @staticmethod
    def from_camera_to_world(fx, fy, cx, cy, width, height,
                             rotation_c2w, translation_c2w) -> "CameraView":
        """Build from a camera-to-world pose by inverting it at load time."""
        r = np.asarray(rotation_c2w, dtype=np.float64)
        t = np.asarray(translation_c2w, dtype=np.float64).reshape(3)
        return CameraView(fx, fy, cx, cy, width, height, r.T, -r.T @ t)

    def to_camera_frame(self, points: np.ndarray) -> np.ndarray:
        """Transform world points (n, 3) into the camera frame."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return pts @ self.rotation.T + self.translation


@dataclass(frozen=True)
class InstanceMask:
    """Per-view label image: 0 = background, positive ids = instances.

    Ids are view-local; no cross-view correspondence is assumed.
    """

    labels: np.ndarray  # (height, width) int32

    def __post_init__(self):
        lab = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int32))
        if lab.ndim != 2:
            raise ValueError(f"mask labels must be 2D, got shape {lab.shape}")
        if lab.size and lab.min() < 0:
            raise ValueError("mask labels must be non-negative")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def instance_ids(self) -> np.ndarray:
        """Sorted positive ids present in the mask."""
        ids = np.unique(self.labels)
        return ids[ids > 0]


@dataclass(frozen=True)
class PointCloud:
    """Unordered 3D points in meters.  May be empty."""

    points: np.ndarray  # (n, 3) float64

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (n, 3), got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @staticmethod
    def empty() -> "PointCloud":
        return PointCloud(np.empty((0, 3), dtype=np.float64))


@dataclass(frozen=True)
class Dataset:
    """Views paired with masks, an occluder cloud, and the target cloud.

    env_cloud is the sole occluder set; the pipeline additionally unions
    the queried subcluster into every depth test so self-occlusion is
    modeled even if env_cloud omits the target points.
    """

    views: tuple  # tuple[(CameraView, InstanceMask), ...]
    env_cloud: PointCloud
    crop_cloud: PointCloud

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))
        if len(self.views) < 1:
            raise ValueError("dataset needs at least one view")

    @property
    def n_views(self) -> int:
        return len(self.views)


def camera_project(view: CameraView, point) -> Optional[tuple[tuple[int, int], float]]:
    """Project one world point to an integer pixel and its depth.

    Returns None when the point is behind the camera (depth <= 0) or the
    rounded pixel falls outside [0, width) x [0, height).  Rounding is
    floor(x + 0.5) on both axes.
    """
    p = np.asarray(point, dtype=np.float64).reshape(3)
    pc = view.rotation @ p + view.translation
    z = float(pc[2])
    if z <= 0.0:
        return None
    px = int(np.floor(view.fx * pc[0] / z + view.cx + 0.5))
    py = int(np.floor(view.fy * pc[1] / z + view.cy + 0.5))
    if not (0 <= px < view.width and 0 <= py < view.height):
        return None
    return (px, py), z


def project_points(view: CameraView, points: np.ndarray):
    """Vectorized projection of world points for the rasterizer.

    Returns (u, v, z) for the subset with positive depth: int32 pixel
    centers (not clipped to the frame; discs may straddle the border) and
    float64 depths.  The rounding rule matches camera_project.
    """
    pc = view.to_camera_frame(points)
    z = pc[:, 2]
    front = z > 0.0
    pc = pc[front]
    z = z[front]
    u = np.floor(view.fx * pc[:, 0] / z + view.cx + 0.5).astype(np.int32)
    v = np.floor(view.fy * pc[:, 1] / z + view.cy + 0.5).astype(np.int32)
    return u, v, z


def validate_dataset(dataset: Dataset) -> list[str]:
    """Collect invariant violations; an empty list means the dataset is valid.

    Findings cover mask/view dimension mismatches and non-orthonormal
    rotations (fatal for the pipeline), plus empty-cloud notes
    (informational: an empty target cloud simply counts zero instances).
    """
    findings = []
    for j, (view, mask) in enumerate(dataset.views):
        if (mask.width, mask.height) != (view.width, view.height):
            findings.append(
                f"view {j}: mask size {mask.width}x{mask.height} does not match "
                f"view size {view.width}x{view.height}"
            )
        if not view.is_orthonormal():
            findings.append(
                f"view {j}: rotation is not orthonormal "
                f"(error {view.rotation_error():.3g} > {ORTHONORMAL_TOL:g})"
            )
    if len(dataset.env_cloud) == 0:
        findings.append("note: env_cloud is empty (no occluders)")
    if len(dataset.crop_cloud) == 0:
        findings.append("note: crop_cloud is empty (nothing to segment)")
    return findings


def fatal_findings(findings: list[str]) -> list[str]:
    """Subset of findings that must abort the pipeline."""
    return [f for f in findings if not f.startswith("note:")]
