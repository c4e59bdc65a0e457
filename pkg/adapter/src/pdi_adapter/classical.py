"""Classical-vision export backend.

Segments the dominant moving subject by background-median differencing
with largest-component selection, then tracks cascade-seeded anchors with
pyramidal Lucas-Kanade flow (forward-backward checked). Produces 2D-only
evidence: masks and tracks, no 3D uplifting. The text query is ignored;
this backend assumes the prompted subject is the dominant mover, which is
exactly the regime the sample clips and smoke tests exercise.
"""

from __future__ import annotations

import cv2
import numpy as np

from .errors import SubjectNotFound
from .seeding import seed_anchors

_MORPH_KERNEL = np.ones((3, 3), dtype=np.uint8)


def segment_subject(frames, diff_threshold=18.0, min_area=60):
    """Per-frame binary masks of the largest moving component."""
    gray = frames.mean(axis=3).astype(np.float32)
    sample = gray[:: max(1, len(gray) // 16)]
    background = np.median(sample, axis=0)
    masks = np.zeros(gray.shape, dtype=bool)
    found_any = False
    for t in range(len(gray)):
        diff = np.abs(gray[t] - background) > diff_threshold
        cleaned = cv2.morphologyEx(diff.astype(np.uint8), cv2.MORPH_OPEN, _MORPH_KERNEL)
        cleaned = cv2.morphologyEx(cleaned, cv2.MORPH_CLOSE, _MORPH_KERNEL)
        count, labels, stats, _ = cv2.connectedComponentsWithStats(cleaned, connectivity=8)
        if count <= 1:
            continue
        areas = stats[1:, cv2.CC_STAT_AREA]
        best = int(np.argmax(areas)) + 1
        if areas[best - 1] < min_area:
            continue
        masks[t] = labels == best
        found_any = True
    if not found_any:
        raise SubjectNotFound(
            f"no moving component of at least {min_area} px in any frame")
    return masks


def track_anchors(frames, masks, config):
    """LK tracks seeded in the first non-empty mask.

    Returns (uv (N, T, 2), confidence (N, T)); confidence is 1 while the
    point tracks consistently and stays in frame, 0 afterwards.
    """
    t_total, height, width = masks.shape
    gray = np.stack([cv2.cvtColor(f, cv2.COLOR_RGB2GRAY) for f in frames])
    first = next((t for t in range(t_total) if masks[t].any()), None)
    if first is None:
        raise SubjectNotFound("no non-empty mask to seed anchors in")
    seeds = seed_anchors(gray[first], masks[first], target=config.target_anchors,
                         sift_max=config.sift_max_features,
                         shi_quality=config.shi_tomasi_quality,
                         grid_stride=config.grid_stride)
    if len(seeds) < 2:
        raise SubjectNotFound(f"only {len(seeds)} anchors seeded, need at least 2")

    n = len(seeds)
    uv = np.zeros((n, t_total, 2), dtype=np.float64)
    conf = np.zeros((n, t_total), dtype=np.float64)
    uv[:, first] = seeds
    conf[:, first] = 1.0
    lk = dict(winSize=(15, 15), maxLevel=2,
              criteria=(cv2.TERM_CRITERIA_EPS | cv2.TERM_CRITERIA_COUNT, 30, 0.01))

    pts = seeds.reshape(-1, 1, 2).astype(np.float32)
    alive = np.ones(n, dtype=bool)
    for t in range(first + 1, t_total):
        nxt, status, _ = cv2.calcOpticalFlowPyrLK(gray[t - 1], gray[t], pts, None, **lk)
        back, st_back, _ = cv2.calcOpticalFlowPyrLK(gray[t], gray[t - 1], nxt, None, **lk)
        fb_err = np.linalg.norm((back - pts).reshape(-1, 2), axis=1)
        flat = nxt.reshape(-1, 2)
        in_bounds = ((flat[:, 0] >= 0) & (flat[:, 0] <= width - 1)
                     & (flat[:, 1] >= 0) & (flat[:, 1] <= height - 1))
        ok = (status.reshape(-1) == 1) & (st_back.reshape(-1) == 1) \
            & (fb_err <= config.fb_error_limit) & in_bounds
        alive &= ok
        uv[alive, t] = flat[alive]
        conf[alive, t] = 1.0
        pts = nxt

    # frames before seeding and after loss keep clamped coordinates, conf 0
    uv[:, :, 0] = np.clip(uv[:, :, 0], 0.0, width - 1.0)
    uv[:, :, 1] = np.clip(uv[:, :, 1], 0.0, height - 1.0)
    return uv, conf


def export_classical(frames, fps, config):
    """Full classical pipeline: returns (masks, uv, confidence)."""
    masks = segment_subject(frames, diff_threshold=config.diff_threshold,
                            min_area=config.min_subject_area)
    uv, conf = track_anchors(frames, masks, config)
    return masks, uv, conf
