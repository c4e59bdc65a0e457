"""Anchor seeding inside the first subject mask.

Cascade: SIFT keypoints first (strong, repeatable corners), Shi-Tomasi
corners to top up, and a uniform grid as the last resort so low-texture
subjects still receive anchors.
"""

from __future__ import annotations

import cv2
import numpy as np


def _dedup(points, min_dist=3.0):
    kept = []
    for p in points:
        if all((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 >= min_dist ** 2 for q in kept):
            kept.append(p)
    return kept


def seed_anchors(gray0, mask0, target=64, sift_max=48, shi_quality=0.01,
                 grid_stride=12):
    """Seed up to ``target`` anchor pixels inside the mask."""
    mask_u8 = (mask0.astype(np.uint8)) * 255
    points = []

    sift = cv2.SIFT_create(nfeatures=int(sift_max))
    for kp in sift.detect(gray0, mask=mask_u8) or []:
        points.append((float(kp.pt[0]), float(kp.pt[1])))

    if len(points) < target:
        corners = cv2.goodFeaturesToTrack(
            gray0, maxCorners=target - len(points), qualityLevel=shi_quality,
            minDistance=5, mask=mask_u8)
        if corners is not None:
            for c in corners.reshape(-1, 2):
                points.append((float(c[0]), float(c[1])))

    points = _dedup(points)
    if len(points) < target:
        rows, cols = np.nonzero(mask0)
        if rows.size:
            for v in range(rows.min(), rows.max() + 1, grid_stride):
                for u in range(cols.min(), cols.max() + 1, grid_stride):
                    if mask0[v, u]:
                        points.append((float(u), float(v)))
        points = _dedup(points)

    return np.asarray(points[:target], dtype=np.float32)
