"""Per-frame audited quantities derived from a perception bundle.

For each frame t this produces the pixel height h_t (row extent of the
mask), the object depth Z_t (median camera-axis depth of masked valid
pointmap pixels, falling back to world Z when no poses are available) and
the world-space centroid C_t (coordinate-wise median of the same pixels).
Frames without enough foreground evidence inherit the last valid frame's
values; leading invalid frames inherit forward from the first valid one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NoValidFrames

DEFAULT_MIN_FG_POINTS = 25


@dataclass(frozen=True)
class ObjectObservationSeries:
    """Exactly T entries per field; inherited marks carried-over frames."""
    heights: np.ndarray           # (T,) float, pixels
    depths: np.ndarray | None     # (T,) float, world units; None in 2D mode
    centroids: np.ndarray | None  # (T, 3) float, world units; None in 2D mode
    pixel_centroids: np.ndarray   # (T, 2) float, mask centroid in pixels
    valid: np.ndarray             # (T,) bool, originally-valid frames
    inherited: np.ndarray         # (T,) bool

    @property
    def has_3d(self):
        return self.centroids is not None

    @property
    def frame_count(self):
        return len(self.heights)


def _mask_height(mask):
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return 0.0
    return float(rows[-1] - rows[0] + 1)


def _mask_pixel_centroid(mask):
    rows, cols = np.nonzero(mask)
    return np.array([cols.mean(), rows.mean()], dtype=np.float64)


def extract_observations(bundle, min_fg_points=DEFAULT_MIN_FG_POINTS):
    """Derive the per-frame observation series from a bundle.

    Raises NoValidFrames when no frame has at least ``min_fg_points``
    foreground points (foreground AND pointmap-valid when pointmaps are
    present, plain foreground otherwise).
    """
    meta = bundle.meta
    t_total = meta.frame_count
    masks = bundle.masks.masks
    has_3d = bundle.pointmaps is not None

    heights = np.zeros(t_total)
    pixel_centroids = np.zeros((t_total, 2))
    depths = np.zeros(t_total) if has_3d else None
    centroids = np.zeros((t_total, 3)) if has_3d else None
    valid = np.zeros(t_total, dtype=bool)

    for t in range(t_total):
        fg = masks[t]
        if has_3d:
            usable = fg & bundle.pointmaps.valid[t]
        else:
            usable = fg
        if int(usable.sum()) < min_fg_points:
            continue
        valid[t] = True
        heights[t] = _mask_height(fg)
        pixel_centroids[t] = _mask_pixel_centroid(fg)
        if has_3d:
            pts = bundle.pointmaps.points[t][usable]
            centroids[t] = np.median(pts, axis=0)
            if bundle.poses is not None:
                cam_pts = bundle.poses.camera_points(t, pts)
                depths[t] = np.median(cam_pts[:, 2])
            else:
                depths[t] = np.median(pts[:, 2])

    if not valid.any():
        raise NoValidFrames(
            f"no frame has >= {min_fg_points} valid foreground points")

    inherited = ~valid
    first_valid = int(np.flatnonzero(valid)[0])
    last = first_valid
    for t in range(t_total):
        if valid[t]:
            last = t
            continue
        src = first_valid if t < first_valid else last
        heights[t] = heights[src]
        pixel_centroids[t] = pixel_centroids[src]
        if has_3d:
            depths[t] = depths[src]
            centroids[t] = centroids[src]

    return ObjectObservationSeries(
        heights=heights, depths=depths, centroids=centroids,
        pixel_centroids=pixel_centroids, valid=valid, inherited=inherited)


def smooth_centroids(series, k=3):
    """Median-filter each centroid coordinate over a centered window.

    Edge frames use symmetrically shrunken windows (size 1 at the ends for
    k=3), which leaves constant and affine trajectories untouched. Heights
    and depths are not modified. k must be odd and >= 1.
    """
    if k < 1 or k % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {k}")
    if k == 1 or series.centroids is None:
        return series
    cents = series.centroids
    t_total = len(cents)
    out = cents.copy()
    half = k // 2
    for t in range(t_total):
        arm = min(half, t, t_total - 1 - t)
        if arm == 0:
            continue
        window = cents[t - arm:t + arm + 1]
        out[t] = np.median(window, axis=0)
    return replace(series, centroids=out)
