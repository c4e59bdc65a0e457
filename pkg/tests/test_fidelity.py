import numpy as np
import pytest
from dataclasses import replace

from pdibench.errors import MissingEvidence
from pdibench.fidelity import (GuardThresholds, audit_reconstruction,
                               reproject, sample_frame_pairs)
from pdibench.interchange import PointmapSequence

from conftest import box_scene, render


def _downward_static_scene(t=2, size=256):
    """Static scene, camera translated 0.1 units, steep pitch so every ray
    lands on nearby ground (bounded resampling error)."""
    doc = box_scene(
        t=t, size=size,
        camera={"path": "linear", "position": [0.0, 0.0, 0.0],
                "position_end": [0.1 * (t - 1), 0.0, 0.0],
                "look_at": [0.0, 2.5, 3.3]},
        box=(1.0, 1.0, 0.8), start=(0.3, 2.0, 3.2))
    doc["ground_radius"] = 16.0
    return doc


def _corrupt_depth(bundle, frames):
    pts = bundle.pointmaps.points.copy()
    for t in frames:
        pts[t, :, :, 2] *= 2.0
    return replace(bundle, pointmaps=PointmapSequence(
        points=pts, valid=bundle.pointmaps.valid))


class TestReproject:
    def test_identity_pose_mae_is_exactly_zero(self, guard_box):
        b = guard_box.bundle
        colors = b.frames[0].astype(np.float64) / 255.0
        rendered, covered = reproject(
            b.pointmaps.points[0], b.pointmaps.valid[0], colors,
            b.poses.rotations[0], b.poses.translations[0], b.intrinsics,
            (b.meta.height, b.meta.width))
        assert covered.any()
        ref = b.frames[0].astype(np.float64) / 255.0
        assert np.abs(rendered[covered] - ref[covered]).max() == 0.0

    def test_small_translation_high_fidelity(self):
        rendered = render(_downward_static_scene())
        b = rendered.bundle
        colors = b.frames[0].astype(np.float64) / 255.0
        out, covered = reproject(
            b.pointmaps.points[0], b.pointmaps.valid[0], colors,
            b.poses.rotations[1], b.poses.translations[1], b.intrinsics,
            (b.meta.height, b.meta.width))
        coverage = covered.mean()
        ref = b.frames[1].astype(np.float64) / 255.0
        mae = np.abs(out[covered] - ref[covered]).mean()
        assert coverage > 0.9
        assert mae < 2.0 / 255.0

    def test_points_behind_camera_give_zero_coverage(self, guard_box):
        b = guard_box.bundle
        flip = np.diag([-1.0, 1.0, -1.0])  # camera turned away from the scene
        colors = b.frames[0].astype(np.float64) / 255.0
        _, covered = reproject(
            b.pointmaps.points[0], b.pointmaps.valid[0], colors,
            flip, np.zeros(3), b.intrinsics, (b.meta.height, b.meta.width))
        assert covered.sum() == 0

    def test_coverage_monotone_in_validity(self, guard_box):
        b = guard_box.bundle
        colors = b.frames[0].astype(np.float64) / 255.0
        full_valid = b.pointmaps.valid[0]
        shrunk = full_valid.copy()
        shrunk[::2, :] = False
        args = (b.poses.rotations[3], b.poses.translations[3], b.intrinsics,
                (b.meta.height, b.meta.width))
        _, cov_full = reproject(b.pointmaps.points[0], full_valid, colors, *args)
        _, cov_shrunk = reproject(b.pointmaps.points[0], shrunk, colors, *args)
        assert cov_shrunk.sum() <= cov_full.sum()
        assert not (cov_shrunk & ~cov_full).any()


class TestAudit:
    def test_exact_bundle_passes(self, guard_box):
        audits, passed = audit_reconstruction(guard_box.bundle, seed=3)
        assert passed
        assert all(a.passed for a in audits)

    def test_depth_corruption_fails(self, guard_box):
        b = guard_box.bundle
        half = b.meta.frame_count // 2
        corrupted = _corrupt_depth(b, range(half))
        audits, passed = audit_reconstruction(corrupted, seed=3)
        assert not passed
        assert sum(not a.passed for a in audits) * 2 > len(audits)

    def test_two_frame_video_audits_the_only_pair(self):
        rendered = render(_downward_static_scene(t=2))
        audits, passed = audit_reconstruction(rendered.bundle, seed=0)
        assert len(audits) == 1
        assert (audits[0].frame_a, audits[0].frame_b) == (0, 1)
        assert passed

    def test_missing_evidence(self, guard_box):
        without_frames = replace(guard_box.bundle, frames=None)
        with pytest.raises(MissingEvidence):
            audit_reconstruction(without_frames)

    def test_deterministic_given_seed(self, guard_box):
        a1, p1 = audit_reconstruction(guard_box.bundle, seed=42)
        a2, p2 = audit_reconstruction(guard_box.bundle, seed=42)
        assert p1 == p2
        assert [(a.frame_a, a.frame_b, a.mae) for a in a1] == \
               [(a.frame_a, a.frame_b, a.mae) for a in a2]

    def test_pair_gap_range(self):
        rng = np.random.default_rng(0)
        pairs = sample_frame_pairs(48, 64, rng)
        gaps = [b - a for a, b in pairs]
        assert min(gaps) >= 3
        assert max(gaps) <= 12  # T/4
        assert all(0 <= a and b < 48 for a, b in pairs)

    def test_thresholds_gate_pass(self, guard_box):
        strict = GuardThresholds(cov_min=0.999, mae_max=1e-9, l2_max=1e-9)
        _, passed = audit_reconstruction(guard_box.bundle, thresholds=strict, seed=3)
        assert not passed
