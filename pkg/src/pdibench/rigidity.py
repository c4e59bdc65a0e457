"""Structural rigidity residual with a prioritized strategy hierarchy.

Strategy 1 (pairwise3d): 3D anchor-pair distance ratios against the first
frame; per-frame dispersion is MAD / median over the pair ratios, which is
blind to global monocular scale drift but fires on local deformation.
Anchor pairs are picked at frame 0 by triple filtering: tracking
confidence, depth-gradient smoothness, and a score that prefers widely
separated, interior anchors.

Strategy 2 (height3d): coefficient of variation of the per-frame 3D
object height (5th..95th percentile span of masked world Y).

Strategy 3 (pairwise2d): same ratio construction on raw 2D tracks with
std / mean dispersion.

The dispatcher degrades through the strategies as evidence disappears and
never raises; when nothing is available the residual is zero with the
strategy recorded as "none".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientAnchors, NoUsableFrames, NoValidFrames
from .geometry import boundary_distance_map, depth_gradient_map, round_half_away

DISPERSION_EPS = 1e-6
CONF_GATE = 0.5
GRADIENT_PERCENTILE = 75.0
DEFAULT_MAX_PAIRS = 64


@dataclass(frozen=True)
class AnchorPairSet:
    pairs: np.ndarray      # (P, 2) int track indices, i < j
    baselines: np.ndarray  # (P,) frame-0 3D separations, > 0
    scores: np.ndarray     # (P,) selection scores


@dataclass(frozen=True)
class RigidityResult:
    strategy_used: str               # pairwise3d | height3d | pairwise2d | none
    value: float
    frame_scores: np.ndarray | None = None


def _sample_ok(pointmaps, t, uv):
    """Nearest-pixel sample returning (ok, point) instead of raising."""
    height, width = pointmaps.points.shape[1:3]
    col = int(round_half_away(uv[0]))
    row = int(round_half_away(uv[1]))
    if not (0 <= row < height and 0 <= col < width):
        return False, None
    if not pointmaps.valid[t, row, col]:
        return False, None
    return True, pointmaps.points[t, row, col]


def _mad(values):
    med = np.median(values)
    return float(np.median(np.abs(values - med)))


def select_anchor_pairs(tracks, pointmaps, mask0, max_pairs=DEFAULT_MAX_PAIRS):
    """Triple-filtered anchor pairs, chosen at frame 0 only.

    Filters: (1) tracking confidence above 0.5 at frame 0 and a valid
    pointmap sample there; (2) frame-0 depth-gradient magnitude at the
    anchor at or below the 75th percentile of the masked region; (3) pair
    scoring ||q0_i - q0_j|| * min(D_i, D_j) with D the distance to the
    mask boundary, keeping the top ``max_pairs`` (ties broken by lower
    (i, j)). Raises InsufficientAnchors when fewer than two anchors or no
    non-degenerate pair survives.
    """
    n = len(tracks)
    grad = depth_gradient_map(pointmaps, 0)
    masked = np.asarray(mask0, dtype=bool) & pointmaps.valid[0]
    if masked.any():
        grad_cut = float(np.percentile(grad[masked], GRADIENT_PERCENTILE))
    else:
        grad_cut = float("inf")
    bdist = boundary_distance_map(mask0)

    anchors = []
    points0 = {}
    border = {}
    for i in range(n):
        if tracks.confidence[i, 0] <= CONF_GATE:
            continue
        ok, q0 = _sample_ok(pointmaps, 0, tracks.uv[i, 0])
        if not ok:
            continue
        col = int(round_half_away(tracks.uv[i, 0, 0]))
        row = int(round_half_away(tracks.uv[i, 0, 1]))
        if grad[row, col] > grad_cut:
            continue
        anchors.append(i)
        points0[i] = np.asarray(q0, dtype=np.float64)
        border[i] = float(bdist[row, col])

    if len(anchors) < 2:
        raise InsufficientAnchors(
            f"only {len(anchors)} anchors survive filtering, need 2")

    candidates = []
    for a in range(len(anchors)):
        for b in range(a + 1, len(anchors)):
            i, j = anchors[a], anchors[b]
            dist = float(np.linalg.norm(points0[i] - points0[j]))
            if dist <= 1e-9:
                continue
            score = dist * min(border[i], border[j])
            candidates.append((-score, i, j, dist, score))
    if not candidates:
        raise InsufficientAnchors("all surviving anchor pairs are degenerate")
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    chosen = candidates[:max_pairs]
    return AnchorPairSet(
        pairs=np.array([(c[1], c[2]) for c in chosen], dtype=np.int64),
        baselines=np.array([c[3] for c in chosen]),
        scores=np.array([c[4] for c in chosen]))


def rigidity_pairwise3d(pairs, tracks, pointmaps):
    """Strategy 1: MAD/median dispersion of 3D pair-distance ratios.

    Frame 0 is excluded (its ratios are 1 by construction). Frames with
    fewer than two usable pairs inherit the previous frame's score (zero
    before any frame scored). Raises NoUsableFrames when no frame after
    the first has two usable pairs.
    """
    t_total = tracks.frame_count
    frame_scores = np.zeros(t_total)
    scored_any = False
    prev = 0.0
    for t in range(1, t_total):
        ratios = []
        for (i, j), base in zip(pairs.pairs, pairs.baselines):
            if tracks.confidence[i, t] <= CONF_GATE or tracks.confidence[j, t] <= CONF_GATE:
                continue
            ok_i, qi = _sample_ok(pointmaps, t, tracks.uv[i, t])
            ok_j, qj = _sample_ok(pointmaps, t, tracks.uv[j, t])
            if not (ok_i and ok_j):
                continue
            ratios.append(float(np.linalg.norm(
                np.asarray(qi, dtype=np.float64) - np.asarray(qj, dtype=np.float64))) / base)
        if len(ratios) >= 2:
            arr = np.asarray(ratios)
            prev = _mad(arr) / (float(np.median(arr)) + DISPERSION_EPS)
            scored_any = True
        frame_scores[t] = prev
    if not scored_any:
        raise NoUsableFrames("no frame after the first has two usable anchor pairs")
    value = float(np.mean(frame_scores[1:]))
    return RigidityResult(strategy_used="pairwise3d", value=value,
                          frame_scores=frame_scores)


def rigidity_height3d(bundle, min_points=2):
    """Strategy 2: coefficient of variation of per-frame 3D height.

    Height is the 5th-to-95th percentile span of world Y over masked valid
    pointmap pixels; frames with fewer than ``min_points`` such pixels are
    skipped. Population standard deviation over the surviving frames.
    """
    pm = bundle.pointmaps
    spans = []
    for t in range(bundle.meta.frame_count):
        usable = bundle.masks.masks[t] & pm.valid[t]
        ys = pm.points[t, :, :, 1][usable]
        if ys.size < min_points:
            continue
        lo, hi = np.percentile(ys, [5.0, 95.0])
        spans.append(float(hi - lo))
    if not spans:
        raise NoValidFrames("no frame has enough masked valid points for a 3D height")
    spans = np.asarray(spans)
    value = float(np.std(spans) / (np.mean(spans) + DISPERSION_EPS))
    return RigidityResult(strategy_used="height3d", value=value, frame_scores=None)


def rigidity_pairwise2d(tracks):
    """Strategy 3: std/mean dispersion of 2D pair-distance ratios.

    All frames contribute (frame 0 scores zero by construction); frames
    with no usable pair inherit the previous score. A single usable pair
    has zero dispersion.
    """
    n = len(tracks)
    candidates = [i for i in range(n) if tracks.confidence[i, 0] > CONF_GATE]
    if len(candidates) < 2:
        raise InsufficientAnchors(
            f"only {len(candidates)} confident tracks at frame 0, need 2")
    pair_list = []
    for a in range(len(candidates)):
        for b in range(a + 1, len(candidates)):
            i, j = candidates[a], candidates[b]
            d0 = float(np.linalg.norm(tracks.uv[i, 0] - tracks.uv[j, 0]))
            if d0 > 1e-9:
                pair_list.append((i, j, d0))
    if not pair_list:
        raise InsufficientAnchors("all confident track pairs are degenerate at frame 0")

    t_total = tracks.frame_count
    frame_scores = np.zeros(t_total)
    prev = 0.0
    for t in range(t_total):
        ratios = []
        for i, j, d0 in pair_list:
            if tracks.confidence[i, t] <= CONF_GATE or tracks.confidence[j, t] <= CONF_GATE:
                continue
            ratios.append(float(np.linalg.norm(tracks.uv[i, t] - tracks.uv[j, t])) / d0)
        if ratios:
            arr = np.asarray(ratios)
            prev = float(np.std(arr) / (np.mean(arr) + DISPERSION_EPS))
        frame_scores[t] = prev
    value = float(np.mean(frame_scores))
    return RigidityResult(strategy_used="pairwise2d", value=value,
                          frame_scores=frame_scores)


def rigidity_dispatch(bundle, tracks, allow_3d=True, max_pairs=DEFAULT_MAX_PAIRS):
    """Choose the best available strategy; degrade instead of raising.

    pairwise3d when pointmaps are present (and trusted) and pair selection
    succeeds, else height3d on the same pointmaps, else pairwise2d on the
    tracks, else a zero residual flagged with strategy "none".
    """
    if bundle.pointmaps is not None and allow_3d:
        try:
            pairs = select_anchor_pairs(tracks, bundle.pointmaps,
                                        bundle.masks.masks[0], max_pairs)
            return rigidity_pairwise3d(pairs, tracks, bundle.pointmaps)
        except (InsufficientAnchors, NoUsableFrames):
            pass
        try:
            return rigidity_height3d(bundle)
        except NoValidFrames:
            pass
    if len(tracks) >= 2:
        try:
            return rigidity_pairwise2d(tracks)
        except InsufficientAnchors:
            pass
    return RigidityResult(strategy_used="none", value=0.0, frame_scores=None)
