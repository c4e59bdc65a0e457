"""Vanishing-point diagnostics for longitudinal motion.

For a linear 3D trajectory with a depth component, both the projected
height and the pixel distance from the centroid to the vanishing point
fall off as 1/Z, so their product is constant. The homogeneity residual
audits that identity; the angular coupling compares a motion-derived
vanishing point against an externally supplied scene vanishing point.
These are report-only diagnostics and never enter the composite score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTrack, DegenerateVp, TransverseMotion, VpTooClose

MIN_HEIGHT_VARIATION = 0.02   # relative h spread below which no VP is inferable
MIN_TRACK_SPREAD = 2.0        # pixels
STABLE_FIT_RMS = 2.0          # pixels, line-fit quality gate
MIN_VP_DISTANCE = 1.0         # pixels


@dataclass(frozen=True)
class VpCouplingResult:
    applicable: bool
    reason: str
    vp_fg: np.ndarray | None = None
    vp_bg: np.ndarray | None = None
    residuals: np.ndarray | None = None
    delta_theta: float | None = None


def _tls_line(points):
    """Total-least-squares line through 2D points: (mean, unit dir, rms)."""
    pts = np.asarray(points, dtype=np.float64)
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered
    eigvals, eigvecs = np.linalg.eigh(cov)
    direction = eigvecs[:, -1]
    perp = centered @ np.array([-direction[1], direction[0]])
    rms = float(np.sqrt(np.mean(perp ** 2)))
    return mean, direction, rms


def estimate_foreground_vp(centroid_pixels, heights):
    """Vanishing point of the object's image motion.

    Fits a total-least-squares line through the centroid pixel track,
    parameterises positions along it, and regresses that position against
    the projected height: the intercept at h -> 0 is where the object
    would vanish. Raises DegenerateTrack for too-short tracks and
    TransverseMotion when the height barely changes (no depth motion, so
    this construction carries no signal).
    """
    pts = np.asarray(centroid_pixels, dtype=np.float64)
    h = np.asarray(heights, dtype=np.float64)
    if pts.shape[0] < 3:
        raise DegenerateTrack(f"need at least 3 centroid pixels, got {pts.shape[0]}")
    h_med = float(np.median(h))
    if h_med <= 0:
        raise DegenerateTrack("heights must be positive")
    variation = (float(h.max()) - float(h.min())) / h_med
    if variation < MIN_HEIGHT_VARIATION:
        raise TransverseMotion(
            f"height varies only {variation:.2%}; no depth motion to extrapolate")
    mean, direction, _ = _tls_line(pts)
    along = (pts - mean) @ direction
    if along.max() - along.min() <= MIN_TRACK_SPREAD:
        raise DegenerateTrack("centroid track spans 2 pixels or less")
    # position-vs-height regression: intercept at h == 0 is the limit point
    slope, intercept = np.polyfit(h, along, 1)
    return mean + intercept * direction


def track_line_rms(centroid_pixels):
    """Perpendicular RMS of the centroid track around its fitted line."""
    _, _, rms = _tls_line(centroid_pixels)
    return rms


def hvp_homogeneity_residuals(heights, centroid_pixels, vp):
    """Per-frame |log| error of the height / VP-distance coupling.

    residual(t) = |ln((h_0 / h_t) * Dist(p_t, VP) / Dist(p_0, VP))|;
    the first frame is zero by construction. Raises VpTooClose when a
    centroid comes within one pixel of the vanishing point.
    """
    h = np.asarray(heights, dtype=np.float64)
    pts = np.asarray(centroid_pixels, dtype=np.float64)
    if (h <= 0).any():
        raise DegenerateTrack("heights must be positive for the coupling residual")
    dist = np.linalg.norm(pts - np.asarray(vp, dtype=np.float64), axis=1)
    if (dist <= MIN_VP_DISTANCE).any():
        raise VpTooClose("a centroid lies within 1 px of the vanishing point")
    residuals = np.abs(np.log((h[0] / h) * (dist / dist[0])))
    residuals[0] = 0.0
    return residuals


def angular_coupling(vp_fg, vp_bg, intrinsics):
    """Angular disagreement of two vanishing points, in [0, 1].

    Directions are measured from the principal point; 0 means the object
    moves exactly toward the scene's horizon point, 1 means the opposite
    direction. Raises DegenerateVp when a VP sits within one pixel of the
    principal point.
    """
    pp = np.array([intrinsics.cx, intrinsics.cy], dtype=np.float64)
    d_fg = np.asarray(vp_fg, dtype=np.float64) - pp
    d_bg = np.asarray(vp_bg, dtype=np.float64) - pp
    n_fg, n_bg = np.linalg.norm(d_fg), np.linalg.norm(d_bg)
    if n_fg < MIN_VP_DISTANCE or n_bg < MIN_VP_DISTANCE:
        raise DegenerateVp("vanishing point too close to the principal point")
    cos = float(np.dot(d_fg, d_bg) / (n_fg * n_bg))
    cos = min(1.0, max(-1.0, cos))
    return (1.0 - cos) / 2.0


def compute_vp_diagnostics(heights, centroid_pixels, intrinsics=None, vp_bg=None):
    """Full diagnostic flow with an explicit applicability verdict."""
    try:
        vp_fg = estimate_foreground_vp(centroid_pixels, heights)
    except TransverseMotion:
        return VpCouplingResult(applicable=False, reason="transverse_motion")
    except DegenerateTrack:
        return VpCouplingResult(applicable=False, reason="degenerate_track")
    rms = track_line_rms(centroid_pixels)
    if rms >= STABLE_FIT_RMS:
        return VpCouplingResult(applicable=False, reason="unstable_fit", vp_fg=vp_fg)
    try:
        residuals = hvp_homogeneity_residuals(heights, centroid_pixels, vp_fg)
    except VpTooClose:
        return VpCouplingResult(applicable=False, reason="vp_too_close", vp_fg=vp_fg)
    delta_theta = None
    vp_bg_arr = None
    if vp_bg is not None and intrinsics is not None:
        vp_bg_arr = np.asarray(vp_bg, dtype=np.float64)
        try:
            delta_theta = angular_coupling(vp_fg, vp_bg_arr, intrinsics)
        except DegenerateVp:
            delta_theta = None
    return VpCouplingResult(applicable=True, reason="ok", vp_fg=vp_fg,
                            vp_bg=vp_bg_arr, residuals=residuals,
                            delta_theta=delta_theta)
