"""Per-video evaluation: evidence -> residuals -> composite record.

The stages are: load, track sanitation, reprojection audit (when frames,
poses, intrinsics and pointmaps are all present), observation extraction,
the three component residuals, vanishing-point diagnostics, and weight
renormalisation over whichever components were computable. A failing
audit marks the video degraded: the scale component becomes unavailable
and rigidity is restricted to the 2D strategy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import observation as obs_mod
from .aggregate import PdiWeights, renormalized_weights
from .errors import InsufficientFrames, PdiError
from .fidelity import DEFAULT_PAIR_COUNT, GuardThresholds, audit_reconstruction
from .interchange import (DEFAULT_CONF_THRESHOLD, DEFAULT_JUMP_FRACTION,
                          load_bundle, sanitize_tracks)
from .motion import compute_kinematics, compute_traj_residuals
from .rigidity import DEFAULT_MAX_PAIRS, rigidity_dispatch
from .scale import compute_scale_residuals
from .vp import compute_vp_diagnostics

SMOOTHING_WINDOW = 3


@dataclass(frozen=True)
class RunConfig:
    weights: PdiWeights = field(default_factory=PdiWeights)
    thresholds: GuardThresholds = field(default_factory=GuardThresholds)
    tau: float = 1.0
    resamples: int = 2000
    seed: int = 0
    jobs: int = 1
    guard_pairs: int = DEFAULT_PAIR_COUNT
    conf_threshold: float = DEFAULT_CONF_THRESHOLD
    jump_fraction: float = DEFAULT_JUMP_FRACTION
    min_fg_points: int = obs_mod.DEFAULT_MIN_FG_POINTS
    max_pairs: int = DEFAULT_MAX_PAIRS


def stable_seed(root_seed, label):
    """Order-independent per-video seed derivation."""
    acc = np.uint64(root_seed)
    for ch in str(label):
        acc = np.uint64((int(acc) * 1000003 + ord(ch)) % (2 ** 63))
    return int(acc)


def _pixel_centroids(bundle, obs):
    """Centroid pixel track: projected world centroids when possible."""
    if obs.has_3d and bundle.intrinsics is not None and bundle.poses is not None:
        cents = np.zeros((obs.frame_count, 2))
        intr = bundle.intrinsics
        for t in range(obs.frame_count):
            cam = bundle.poses.rotations[t] @ obs.centroids[t] + bundle.poses.translations[t]
            if cam[2] <= 1e-9:
                return obs.pixel_centroids
            cents[t, 0] = intr.fx * cam[0] / cam[2] + intr.cx
            cents[t, 1] = intr.fy * cam[1] / cam[2] + intr.cy
        return cents
    return obs.pixel_centroids


def evaluate_bundle(bundle, config=RunConfig(), video_seed=0):
    """Evaluate one loaded bundle into a JSON-serialisable record."""
    tracks = sanitize_tracks(bundle.tracks, bundle.meta,
                             conf_threshold=config.conf_threshold,
                             jump_fraction=config.jump_fraction)

    audit_doc = None
    degraded = False
    can_audit = (bundle.frames is not None and bundle.poses is not None
                 and bundle.intrinsics is not None and bundle.pointmaps is not None)
    if can_audit:
        audits, passed = audit_reconstruction(
            bundle, pair_count=config.guard_pairs,
            thresholds=config.thresholds, seed=video_seed)
        degraded = not passed
        audit_doc = {
            "passed": passed,
            "pairs": [
                {"frame_a": a.frame_a, "frame_b": a.frame_b,
                 "coverage": a.coverage, "mae": a.mae, "l2": a.l2,
                 "passed": a.passed}
                for a in audits],
        }

    obs = obs_mod.extract_observations(bundle, min_fg_points=config.min_fg_points)

    comp_scale = None
    if obs.has_3d and not degraded:
        try:
            comp_scale = compute_scale_residuals(obs).rmse
        except InsufficientFrames:
            comp_scale = None

    comp_traj = None
    if obs.has_3d:
        try:
            smoothed = obs_mod.smooth_centroids(obs, SMOOTHING_WINDOW)
            kin = compute_kinematics(smoothed.centroids, bundle.meta.fps)
            comp_traj = compute_traj_residuals(kin).rmse
        except InsufficientFrames:
            comp_traj = None

    rigidity = rigidity_dispatch(bundle, tracks,
                                 allow_3d=not degraded,
                                 max_pairs=config.max_pairs)

    components = {"scale": comp_scale, "traj": comp_traj, "rigidity": rigidity.value}
    available = [k for k, v in components.items() if v is not None]
    weights_used = renormalized_weights(config.weights, available)
    pdi = sum(weights_used[k] * components[k] for k in weights_used)

    vp_result = compute_vp_diagnostics(
        obs.heights, _pixel_centroids(bundle, obs),
        intrinsics=bundle.intrinsics, vp_bg=bundle.meta.vp_bg)
    vp_doc = {"applicable": vp_result.applicable, "reason": vp_result.reason}
    if vp_result.vp_fg is not None:
        vp_doc["vp_fg"] = [float(x) for x in vp_result.vp_fg]
    if vp_result.residuals is not None:
        vp_doc["residual_mean"] = float(np.mean(vp_result.residuals))
        vp_doc["residual_max"] = float(np.max(vp_result.residuals))
    if vp_result.delta_theta is not None:
        vp_doc["delta_theta"] = float(vp_result.delta_theta)

    return {
        "degraded": degraded,
        "components": components,
        "weights_used": weights_used,
        "pdi": float(pdi),
        "rigidity_strategy": rigidity.strategy_used,
        "audit": audit_doc,
        "vp": vp_doc,
        "inherited_frames": int(obs.inherited.sum()),
        "track_count": len(tracks),
    }


def evaluate_entry(entry, config):
    """Manifest entry -> (record, None) or (None, failure dict)."""
    try:
        bundle = load_bundle(entry.path)
        record = evaluate_bundle(
            bundle, config, video_seed=stable_seed(config.seed, entry.video_id))
        record.update({
            "video_id": entry.video_id,
            "category": entry.category,
            "source_model": entry.source_model,
            "is_ground_truth": entry.is_ground_truth,
        })
        return record, None
    except PdiError as exc:
        return None, {"video_id": entry.video_id,
                      "error": type(exc).__name__, "message": str(exc)}
