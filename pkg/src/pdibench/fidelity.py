"""Cross-frame reprojection audit of 3D reconstruction quality.

Every valid world point of a source frame is transformed into a target
frame's camera, projected, and splatted as a single pixel carrying the
source frame's color, with nearer depth winning per pixel. If the
reconstruction is sound, the rendered image photometrically matches the
target frame wherever it is covered. The audit samples several frame
pairs and passes on a strict majority; a failing audit marks the video
as degraded, which demotes the 3D evaluation paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingEvidence
from .geometry import round_half_away

MIN_GAP = 3
DEFAULT_PAIR_COUNT = 8


@dataclass(frozen=True)
class GuardThresholds:
    cov_min: float = 0.60
    mae_max: float = 12.0 / 255.0
    l2_max: float = 25.0 / 255.0


@dataclass(frozen=True)
class ReprojectionAudit:
    frame_a: int
    frame_b: int
    coverage: float
    mae: float
    l2: float
    passed: bool


def reproject(points, valid, colors, rotation, translation, intrinsics, out_shape):
    """Render world points with colors into a camera; z-buffered 1-px splats.

    ``points``/``valid``/``colors`` describe the source frame (H, W, 3),
    (H, W), (H, W, 3 in [0, 1]); the pose is the target frame's. Returns
    (rendered (H, W, 3) float image, covered (H, W) bool mask).
    """
    height, width = out_shape
    rendered = np.zeros((height, width, 3), dtype=np.float64)
    covered = np.zeros((height, width), dtype=bool)

    pts = points[valid].astype(np.float64)
    cols = colors[valid].astype(np.float64)
    if pts.size == 0:
        return rendered, covered
    cam = pts @ np.asarray(rotation, dtype=np.float64).T + np.asarray(translation, dtype=np.float64)
    in_front = cam[:, 2] > 1e-9
    cam, cols = cam[in_front], cols[in_front]
    if cam.size == 0:
        return rendered, covered
    u = round_half_away(intrinsics.fx * cam[:, 0] / cam[:, 2] + intrinsics.cx)
    v = round_half_away(intrinsics.fy * cam[:, 1] / cam[:, 2] + intrinsics.cy)
    in_img = (u >= 0) & (u < width) & (v >= 0) & (v < height)
    u, v, z, cols = u[in_img], v[in_img], cam[in_img, 2], cols[in_img]
    if u.size == 0:
        return rendered, covered
    # Assign in decreasing depth so the nearest splat lands last.
    order = np.argsort(-z, kind="stable")
    u, v, cols = u[order], v[order], cols[order]
    rendered[v, u] = cols
    covered[v, u] = True
    return rendered, covered


def _pair_metrics(bundle, frame_a, frame_b):
    pose_r = bundle.poses.rotations[frame_b]
    pose_t = bundle.poses.translations[frame_b]
    colors_a = bundle.frames[frame_a].astype(np.float64) / 255.0
    rendered, covered = reproject(
        bundle.pointmaps.points[frame_a], bundle.pointmaps.valid[frame_a],
        colors_a, pose_r, pose_t, bundle.intrinsics,
        (bundle.meta.height, bundle.meta.width))
    coverage = float(covered.mean())
    if not covered.any():
        return coverage, float("inf"), float("inf")
    ref = bundle.frames[frame_b].astype(np.float64) / 255.0
    diff = rendered[covered] - ref[covered]
    mae = float(np.mean(np.abs(diff)))
    l2 = float(np.sqrt(np.mean(diff ** 2)))
    return coverage, mae, l2


def sample_frame_pairs(frame_count, pair_count, rng):
    """Frame pairs with gaps in [3, T/4], clamped for short videos."""
    lo = min(MIN_GAP, frame_count - 1)
    hi = max(lo, min(frame_count // 4, frame_count - 1))
    pairs = []
    for _ in range(pair_count):
        gap = int(rng.integers(lo, hi + 1))
        start = int(rng.integers(0, frame_count - gap))
        pairs.append((start, start + gap))
    return pairs


def audit_reconstruction(bundle, pair_count=DEFAULT_PAIR_COUNT,
                         thresholds=GuardThresholds(), seed=0):
    """Audit sampled frame pairs; overall pass needs a strict majority.

    Raises MissingEvidence when frames, poses, intrinsics or pointmaps are
    absent. Deterministic for a fixed seed.
    """
    if (bundle.frames is None or bundle.poses is None
            or bundle.intrinsics is None or bundle.pointmaps is None):
        raise MissingEvidence(
            "reprojection audit needs frames, poses, intrinsics and pointmaps")
    t_total = bundle.meta.frame_count
    rng = np.random.default_rng(seed)
    if t_total == 2:
        pairs = [(0, 1)]
    else:
        pairs = sample_frame_pairs(t_total, pair_count, rng)
    audits = []
    for frame_a, frame_b in pairs:
        coverage, mae, l2 = _pair_metrics(bundle, frame_a, frame_b)
        passed = (coverage >= thresholds.cov_min
                  and mae <= thresholds.mae_max and l2 <= thresholds.l2_max)
        audits.append(ReprojectionAudit(frame_a=frame_a, frame_b=frame_b,
                                        coverage=coverage, mae=mae, l2=l2,
                                        passed=passed))
    pass_count = sum(a.passed for a in audits)
    overall = pass_count * 2 > len(audits)
    return audits, overall
