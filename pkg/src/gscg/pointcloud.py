"""Per-instance point clouds: mask erosion, outlier removal, PCA geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .scene_io import SceneBundle, back_project_pixels

MIN_CLOUD_POINTS = 100
EROSION_KERNEL = 3
ZSCORE_THRESHOLD = 2.5


@dataclass(frozen=True)
class InstanceCloud:
    """Cleaned 3D points of one object instance plus their source pixels."""

    instance_id: int
    points: np.ndarray         # N x 3, meters
    source_pixels: np.ndarray  # N x 2, (u, v)


@dataclass(frozen=True)
class GeometryAttributes:
    """PCA-derived size, orientation, and centroid of an instance cloud.

    size is two standard deviations along each principal axis (2 * sqrt of
    the covariance eigenvalues), sorted descending; orientation columns are
    the matching unit eigenvectors.
    """

    size: np.ndarray         # 3, meters, descending
    orientation: np.ndarray  # 3 x 3, orthonormal columns
    centroid: np.ndarray     # 3, meters


def erode_mask(mask: np.ndarray, kernel: int = EROSION_KERNEL) -> np.ndarray:
    """Binary erosion with a kernel x kernel square; outside the image is 0."""
    if kernel % 2 != 1 or kernel < 1:
        raise ValueError(f"kernel size must be odd and >= 1, got {kernel}")
    if kernel == 1:
        return mask.astype(bool).copy()
    structure = np.ones((kernel, kernel), dtype=bool)
    return ndimage.binary_erosion(mask.astype(bool), structure=structure, border_value=0)


def zscore_filter(points: np.ndarray, threshold: float = ZSCORE_THRESHOLD) -> np.ndarray:
    """Drop points whose per-axis Z-score exceeds the threshold on any axis.

    Statistics are the mean and population standard deviation of the input,
    computed once (no re-estimation). A zero-variance axis contributes a
    Z-score of 0 for every point.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[0] == 0:
        return pts
    mu = pts.mean(axis=0)
    sigma = pts.std(axis=0)  # population convention (1/N)
    z = np.zeros_like(pts)
    nz = sigma > 0
    z[:, nz] = np.abs(pts[:, nz] - mu[nz]) / sigma[nz]
    return pts[(z <= threshold).all(axis=1)]


def zscore_keep_mask(points: np.ndarray, threshold: float = ZSCORE_THRESHOLD) -> np.ndarray:
    """Boolean keep-mask version of zscore_filter (same statistics and rule)."""
    pts = np.asarray(points, dtype=np.float64)
    mu = pts.mean(axis=0)
    sigma = pts.std(axis=0)
    z = np.zeros_like(pts)
    nz = sigma > 0
    z[:, nz] = np.abs(pts[:, nz] - mu[nz]) / sigma[nz]
    return (z <= threshold).all(axis=1)


def extract_instance_cloud(bundle: SceneBundle, instance_id: int) -> InstanceCloud | None:
    """Mask -> erode 3x3 -> back-project valid-depth pixels -> Z-score filter.

    Returns None when fewer than MIN_CLOUD_POINTS points survive.
    """
    if instance_id not in bundle.semantic_of_instance:
        raise KeyError(f"unknown instance id {instance_id}")
    mask = erode_mask(bundle.instance_map == instance_id, EROSION_KERNEL)
    vs, us = np.nonzero(mask)
    depths = bundle.depth_m[vs, us]
    ok = np.isfinite(depths) & (depths > 0)
    us, vs, depths = us[ok], vs[ok], depths[ok]
    if len(us) == 0:
        return None
    points = back_project_pixels(us, vs, depths, bundle.intrinsics)
    keep = zscore_keep_mask(points, ZSCORE_THRESHOLD)
    points = points[keep]
    if points.shape[0] < MIN_CLOUD_POINTS:
        return None
    pixels = np.stack([us[keep], vs[keep]], axis=1)
    return InstanceCloud(instance_id=int(instance_id), points=points, source_pixels=pixels)


def _fix_eigenvector_signs(vectors: np.ndarray) -> np.ndarray:
    # Make each column's first nonzero component (x, then y, then z) positive
    # so orientations are reproducible across eigensolver runs.
    out = vectors.copy()
    for col in range(out.shape[1]):
        for row in range(out.shape[0]):
            c = out[row, col]
            if c != 0.0:
                if c < 0.0:
                    out[:, col] = -out[:, col]
                break
    return out


def pca_geometry(cloud: InstanceCloud | np.ndarray) -> GeometryAttributes:
    """Centroid, principal sizes, and orientation of a point cloud.

    Covariance uses the population (1/N) convention. size_i = 2 * sqrt(λ_i)
    with eigenvalues in descending order; degenerate axes get size 0.
    """
    pts = cloud.points if isinstance(cloud, InstanceCloud) else np.asarray(cloud, dtype=np.float64)
    if pts.shape[0] < 1:
        raise ValueError("point cloud is empty")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / pts.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = _fix_eigenvector_signs(eigvecs[:, order])
    return GeometryAttributes(
        size=2.0 * np.sqrt(eigvals),
        orientation=eigvecs,
        centroid=centroid,
    )
