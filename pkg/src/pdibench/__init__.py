"""Geometric physical-consistency auditing for videos.

Computes the Perspective Distortion Index (PDI) and its component
residuals (scale-depth alignment, 3D motion consistency, structural
rigidity) from canonical per-video perception evidence, validates them
against a built-in synthetic pinhole oracle with injectable physics
violations, and aggregates per-model report tables.
"""

from .aggregate import (PdiWeights, bootstrap_ci, build_report, gt_anchor,
                        normalize_score, outlier_ratio, synthesize_pdi)
from .errors import PdiError
from .fidelity import GuardThresholds, audit_reconstruction, reproject
from .geometry import (boundary_distance_map, depth_gradient_map,
                       predict_height_delta, predict_pixel_delta, project,
                       projected_height, sample_pointmap,
                       vanishing_point_of_direction)
from .interchange import (CameraIntrinsics, CameraPoseSequence, Manifest,
                          ManifestEntry, MaskSequence, PerceptionBundle,
                          PointmapSequence, TrackSet, VideoMeta, load_bundle,
                          load_manifest, sanitize_tracks, validate_bundle,
                          write_bundle, write_manifest)
from .motion import (acceleration_penalty, compute_kinematics,
                     compute_traj_residuals, direction_penalty)
from .observation import (ObjectObservationSeries, extract_observations,
                          smooth_centroids)
from .pipeline import RunConfig, evaluate_bundle
from .rigidity import (rigidity_dispatch, rigidity_height3d,
                       rigidity_pairwise2d, rigidity_pairwise3d,
                       select_anchor_pairs)
from .scale import compute_scale_residuals
from .synth import (SyntheticSceneSpec, inject_violation, load_scene_spec,
                    render_bundle, scene_spec_from_dict, write_rendered)
from .vp import (angular_coupling, compute_vp_diagnostics,
                 estimate_foreground_vp, hvp_homogeneity_residuals)

__version__ = "0.1.0"

__all__ = [
    "PdiError", "PdiWeights", "GuardThresholds", "RunConfig",
    "VideoMeta", "MaskSequence", "PointmapSequence", "CameraIntrinsics",
    "CameraPoseSequence", "TrackSet", "PerceptionBundle", "Manifest",
    "ManifestEntry", "ObjectObservationSeries", "SyntheticSceneSpec",
    "load_bundle", "write_bundle", "sanitize_tracks", "validate_bundle",
    "load_manifest", "write_manifest",
    "project", "projected_height", "predict_height_delta",
    "predict_pixel_delta", "sample_pointmap", "depth_gradient_map",
    "boundary_distance_map", "vanishing_point_of_direction",
    "extract_observations", "smooth_centroids", "compute_scale_residuals",
    "compute_kinematics", "acceleration_penalty", "direction_penalty",
    "compute_traj_residuals", "select_anchor_pairs", "rigidity_pairwise3d",
    "rigidity_height3d", "rigidity_pairwise2d", "rigidity_dispatch",
    "estimate_foreground_vp", "hvp_homogeneity_residuals",
    "angular_coupling", "compute_vp_diagnostics",
    "reproject", "audit_reconstruction",
    "synthesize_pdi", "gt_anchor", "normalize_score", "bootstrap_ci",
    "outlier_ratio", "build_report", "evaluate_bundle",
    "render_bundle", "inject_violation", "load_scene_spec",
    "scene_spec_from_dict", "write_rendered",
]
