"""Shared scene builders and rendered-bundle fixtures.

Scene dictionaries mirror the scene.json schema. Cloud scenes use dyadic
coordinates and frame rates (fps 32, spacings that are exact binary
fractions) so that rigid translations stay exact through float32 storage
and the zero-violation metrics come out exactly zero.
"""

from __future__ import annotations

import copy

import pytest

from pdibench.synth import render_bundle, scene_spec_from_dict


def cloud_scene(t=48, size=512, fps=32.0, grid=(9, 9, 1), extent=(2.0, 3.0, 0.0),
                start=(0.0, 0.0, 6.0), velocity=(0.0, 0.0, 4.0),
                category="longitudinal_convergence", ground_y=2.5,
                emit_frames=False):
    f = size * 500.0 / 512.0
    return {
        "meta": {"T": t, "W": size, "H": size, "fps": fps,
                 "category": category, "source_model": "synthetic"},
        "intrinsics": {"fx": f, "fy": f, "cx": size / 2.0, "cy": size / 2.0},
        "object": {"kind": "cloud", "grid": list(grid), "extent": list(extent),
                   "start": list(start)},
        "motion": [{"kind": "constant_velocity", "velocity": list(velocity)}],
        "camera": {"path": "static", "position": [0.0, 0.0, 0.0]},
        "ground_y": ground_y,
        "emit_frames": emit_frames,
        "violations": [],
    }


def box_scene(t=24, size=256, fps=24.0, box=(1.6, 1.6, 1.2),
              start=(0.0, 0.6, 6.0), velocity=(0.0, 0.0, 0.0),
              camera=None, emit_frames=True, track_grid=4,
              category="dynamic_tracking"):
    f = size * 500.0 / 512.0
    if camera is None:
        camera = {"path": "linear", "position": [0.0, -0.2, 0.0],
                  "position_end": [0.9, -0.2, 0.5], "look_at": [0.0, 1.0, 6.0]}
    return {
        "meta": {"T": t, "W": size, "H": size, "fps": fps,
                 "category": category, "source_model": "synthetic"},
        "intrinsics": {"fx": f, "fy": f, "cx": size / 2.0, "cy": size / 2.0},
        "object": {"kind": "box", "size": list(box), "start": list(start),
                   "track_grid": track_grid},
        "motion": [{"kind": "constant_velocity", "velocity": list(velocity)}],
        "camera": camera,
        "ground_y": 2.5,
        "emit_frames": emit_frames,
        "violations": [],
    }


def with_violation(scene, violation):
    doc = copy.deepcopy(scene)
    doc["violations"] = doc.get("violations", []) + [violation]
    return doc


def render(scene_doc, seed=0):
    return render_bundle(scene_spec_from_dict(scene_doc), seed=seed)


@pytest.fixture(scope="session")
def recede_cloud():
    """Constant-velocity rigid recession, 48 frames at 512x512 (exact)."""
    return render(cloud_scene())


@pytest.fixture(scope="session")
def guard_box():
    """Solid textured box with RGB frames and a translating camera."""
    return render(box_scene())
