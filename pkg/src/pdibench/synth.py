"""Synthetic scene oracle: exact perception bundles with known physics.

Scenes are declarative: a rigid object (solid box or sparse point cloud),
a piecewise motion profile, a camera path, and an optional list of physics
violations. Rendering is an exact pinhole ray model:

  * solid boxes are ray-cast per pixel, so masks equal the projected
    silhouette and pointmaps hold exact surface coordinates;
  * point clouds rasterise as the convex hull of their projections, with
    only the projected points themselves stamped into the pointmap (hull
    gaps stay invalid), so world-space medians over the masked evidence
    are exactly camera independent;
  * every visible tracked point's exact world coordinate is stamped into
    the pointmap at its rounded pixel, so anchor sampling returns exact
    positions.

A ground plane at fixed world Y supplies textured background for the
reprojection audit. Identical spec + seed produces byte-identical bundles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import IncompatibleViolation, ObjectOutOfView, SpecInvalid
from .geometry import round_half_away
from .interchange import (CameraIntrinsics, CameraPoseSequence, MaskSequence,
                          PerceptionBundle, PointmapSequence, TrackSet,
                          VideoMeta, write_bundle)

_EPS = 1e-9
SKY_COLOR = np.array([0.35, 0.55, 0.78])


# --------------------------------------------------------------------------
# Scene specification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ObjectSpec:
    kind: str                       # "box" | "cloud"
    size: tuple = (1.0, 1.0, 1.0)   # box extents, world units
    points: np.ndarray | None = None  # cloud points, local coords
    start: tuple = (0.0, 0.0, 6.0)  # initial center, world
    track_grid: int = 4             # per-face grid for box tracks

    @property
    def extent(self):
        if self.kind == "box":
            return np.asarray(self.size, dtype=np.float64)
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return span

    @property
    def height(self):
        return float(self.extent[1])


@dataclass(frozen=True)
class MotionSegment:
    kind: str                      # constant_velocity | stop | circular_arc
    frames: int | None = None      # None = rest of the video
    velocity: tuple = (0.0, 0.0, 0.0)
    arc_center: tuple = (0.0, 0.0, 0.0)
    arc_deg_per_s: float = 0.0


@dataclass(frozen=True)
class CameraSpec:
    path: str = "static"           # static | linear | orbit
    position: tuple = (0.0, 0.0, 0.0)
    position_end: tuple | None = None
    look_at: tuple | None = None
    orbit_center: tuple = (0.0, 0.0, 6.0)
    orbit_radius: float = 6.0
    orbit_degrees: float = 30.0
    orbit_start_deg: float = 0.0
    orbit_eye_y: float = 0.0


@dataclass(frozen=True)
class ViolationSpec:
    kind: str
    frame: int = 0
    frame_end: int | None = None
    offset: tuple = (0.0, 0.0, 0.0)
    amplitude: float = 0.0
    period: float = 0.0
    fraction: float = 0.5


@dataclass(frozen=True)
class OccluderSpec:
    center: tuple
    size: tuple
    frame_start: int = 0
    frame_end: int | None = None


@dataclass(frozen=True)
class SyntheticSceneSpec:
    frame_count: int
    width: int
    height: int
    fps: float
    intrinsics: CameraIntrinsics
    obj: ObjectSpec
    motion: tuple
    camera: CameraSpec = CameraSpec()
    ground_y: float | None = 2.5
    ground_radius: float | None = None
    category: str = "uncategorized"
    source_model: str = "synthetic"
    emit_frames: bool = False
    violations: tuple = ()
    occluder: OccluderSpec | None = None

    def with_violation(self, violation):
        return replace(self, violations=self.violations + (violation,))


def _require(cond, msg):
    if not cond:
        raise SpecInvalid(msg)


def scene_spec_from_dict(doc):
    """Parse and validate the scene.json schema."""
    try:
        meta = doc["meta"]
        t_total = int(meta["T"])
        width, height = int(meta["W"]), int(meta["H"])
        fps = float(meta["fps"])
        intr_doc = doc["intrinsics"]
        intr = CameraIntrinsics(fx=float(intr_doc["fx"]), fy=float(intr_doc["fy"]),
                                cx=float(intr_doc["cx"]), cy=float(intr_doc["cy"]))
        obj_doc = doc["object"]
        kind = obj_doc["kind"]
        _require(kind in ("box", "cloud"), f"object.kind must be box or cloud, got {kind!r}")
        points = None
        size = tuple(float(x) for x in obj_doc.get("size", (1.0, 1.0, 1.0)))
        if kind == "cloud":
            if "points" in obj_doc:
                points = np.asarray(obj_doc["points"], dtype=np.float64)
            else:
                grid = [int(g) for g in obj_doc["grid"]]
                extent = [float(e) for e in obj_doc["extent"]]
                axes = [np.linspace(-e / 2, e / 2, g) if g > 1 else np.array([0.0])
                        for g, e in zip(grid, extent)]
                xs, ys, zs = np.meshgrid(*axes, indexing="ij")
                points = np.column_stack([xs.ravel(), ys.ravel(), zs.ravel()])
            _require(points.ndim == 2 and points.shape[1] == 3 and len(points) >= 3,
                     "cloud needs at least 3 points of shape (N, 3)")
        obj = ObjectSpec(kind=kind, size=size, points=points,
                         start=tuple(float(x) for x in obj_doc["start"]),
                         track_grid=int(obj_doc.get("track_grid", 4)))
        segments = []
        for seg in doc["motion"]:
            segments.append(MotionSegment(
                kind=seg["kind"],
                frames=(int(seg["frames"]) if "frames" in seg else None),
                velocity=tuple(float(x) for x in seg.get("velocity", (0, 0, 0))),
                arc_center=tuple(float(x) for x in seg.get("arc_center", (0, 0, 0))),
                arc_deg_per_s=float(seg.get("arc_deg_per_s", 0.0))))
            _require(segments[-1].kind in ("constant_velocity", "stop", "circular_arc"),
                     f"unknown motion kind {seg['kind']!r}")
        cam_doc = doc.get("camera", {})
        camera = CameraSpec(
            path=cam_doc.get("path", "static"),
            position=tuple(float(x) for x in cam_doc.get("position", (0, 0, 0))),
            position_end=(tuple(float(x) for x in cam_doc["position_end"])
                          if "position_end" in cam_doc else None),
            look_at=(tuple(float(x) for x in cam_doc["look_at"])
                     if "look_at" in cam_doc else None),
            orbit_center=tuple(float(x) for x in cam_doc.get("orbit_center", (0, 0, 6))),
            orbit_radius=float(cam_doc.get("orbit_radius", 6.0)),
            orbit_degrees=float(cam_doc.get("orbit_degrees", 30.0)),
            orbit_start_deg=float(cam_doc.get("orbit_start_deg", 0.0)),
            orbit_eye_y=float(cam_doc.get("orbit_eye_y", 0.0)))
        _require(camera.path in ("static", "linear", "orbit"),
                 f"unknown camera path {camera.path!r}")
        violations = tuple(violation_from_dict(v) for v in doc.get("violations", []))
        occluder = None
        if "occluder" in doc and doc["occluder"] is not None:
            occ = doc["occluder"]
            occluder = OccluderSpec(
                center=tuple(float(x) for x in occ["center"]),
                size=tuple(float(x) for x in occ["size"]),
                frame_start=int(occ.get("frame_start", 0)),
                frame_end=(int(occ["frame_end"]) if "frame_end" in occ else None))
        ground = doc.get("ground_y", 2.5)
        ground_radius = doc.get("ground_radius")
        spec = SyntheticSceneSpec(
            frame_count=t_total, width=width, height=height, fps=fps,
            intrinsics=intr, obj=obj, motion=tuple(segments), camera=camera,
            ground_y=(float(ground) if ground is not None else None),
            ground_radius=(float(ground_radius) if ground_radius is not None else None),
            category=meta.get("category", "uncategorized"),
            source_model=meta.get("source_model", "synthetic"),
            emit_frames=bool(doc.get("emit_frames", False)),
            violations=violations, occluder=occluder)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecInvalid(f"malformed scene spec: {exc}") from exc
    _require(spec.frame_count >= 2, "T must be >= 2")
    _require(spec.fps > 0, "fps must be positive")
    return spec


def violation_from_dict(doc):
    kind = doc["kind"]
    known = ("volume_breathing", "teleport", "reversal", "jello", "scale_freeze")
    _require(kind in known, f"unknown violation kind {kind!r}")
    return ViolationSpec(
        kind=kind,
        frame=int(doc.get("frame", 0)),
        frame_end=(int(doc["frame_end"]) if "frame_end" in doc else None),
        offset=tuple(float(x) for x in doc.get("offset", (0, 0, 0))),
        amplitude=float(doc.get("amplitude", 0.0)),
        period=float(doc.get("period", 0.0)),
        fraction=float(doc.get("fraction", 0.5)))


def load_scene_spec(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecInvalid(f"{path}: unreadable scene spec ({exc})") from exc
    return scene_spec_from_dict(doc)


# --------------------------------------------------------------------------
# Camera and object trajectories
# --------------------------------------------------------------------------

def _look_at_rotation(eye, target):
    forward = np.asarray(target, dtype=np.float64) - np.asarray(eye, dtype=np.float64)
    norm = np.linalg.norm(forward)
    _require(norm > _EPS, "camera look_at coincides with its position")
    forward = forward / norm
    world_down = np.array([0.0, 1.0, 0.0])
    right = np.cross(world_down, forward)
    r_norm = np.linalg.norm(right)
    _require(r_norm > 1e-6, "camera forward direction is vertical; pick another look_at")
    right = right / r_norm
    down = np.cross(forward, right)
    return np.stack([right, down, forward])


def camera_poses(spec):
    """Per-frame world-to-camera rotations and translations."""
    t_total = spec.frame_count
    cam = spec.camera
    rotations = np.zeros((t_total, 3, 3))
    translations = np.zeros((t_total, 3))
    for t in range(t_total):
        frac = t / (t_total - 1) if t_total > 1 else 0.0
        if cam.path == "static":
            eye = np.asarray(cam.position, dtype=np.float64)
            rot = (_look_at_rotation(eye, cam.look_at)
                   if cam.look_at is not None else np.eye(3))
        elif cam.path == "linear":
            start = np.asarray(cam.position, dtype=np.float64)
            end = np.asarray(cam.position_end if cam.position_end is not None
                             else cam.position, dtype=np.float64)
            eye = start + frac * (end - start)
            rot = (_look_at_rotation(eye, cam.look_at)
                   if cam.look_at is not None else np.eye(3))
        else:  # orbit
            theta = math.radians(cam.orbit_start_deg + frac * cam.orbit_degrees)
            center = np.asarray(cam.orbit_center, dtype=np.float64)
            eye = np.array([center[0] + cam.orbit_radius * math.sin(theta),
                            cam.orbit_eye_y,
                            center[2] - cam.orbit_radius * math.cos(theta)])
            target = np.asarray(cam.look_at, dtype=np.float64) if cam.look_at is not None else center
            rot = _look_at_rotation(eye, target)
        rotations[t] = rot
        translations[t] = -rot @ eye
    return CameraPoseSequence(rotations=rotations, translations=translations)


def object_path(spec):
    """Object center per frame from the piecewise motion profile."""
    t_total = spec.frame_count
    dt = 1.0 / spec.fps
    path = np.zeros((t_total, 3))
    path[0] = np.asarray(spec.obj.start, dtype=np.float64)
    segments = list(spec.motion)
    _require(segments, "motion profile needs at least one segment")
    seg_idx = 0
    seg_left = segments[0].frames
    for t in range(1, t_total):
        if seg_left is not None and seg_left <= 0 and seg_idx + 1 < len(segments):
            seg_idx += 1
            seg_left = segments[seg_idx].frames
        seg = segments[seg_idx]
        prev = path[t - 1]
        if seg.kind == "constant_velocity":
            path[t] = prev + np.asarray(seg.velocity) * dt
        elif seg.kind == "stop":
            path[t] = prev
        else:  # circular_arc around the vertical axis through arc_center
            center = np.asarray(seg.arc_center, dtype=np.float64)
            angle = math.radians(seg.arc_deg_per_s) * dt
            offset = prev - center
            cos_a, sin_a = math.cos(angle), math.sin(angle)
            rotated = np.array([cos_a * offset[0] + sin_a * offset[2],
                                offset[1],
                                -sin_a * offset[0] + cos_a * offset[2]])
            path[t] = center + rotated
        if seg_left is not None:
            seg_left -= 1
    return path


def _apply_path_violations(path, violations, t_total):
    out = path.copy()
    for v in violations:
        if v.kind == "teleport":
            if not (1 <= v.frame < t_total):
                raise IncompatibleViolation(f"teleport frame {v.frame} outside [1, {t_total})")
            out[v.frame:] += np.asarray(v.offset, dtype=np.float64)
        elif v.kind == "reversal":
            if not (1 <= v.frame < t_total):
                raise IncompatibleViolation(f"reversal frame {v.frame} outside [1, {t_total})")
            pivot = out[v.frame].copy()
            out[v.frame:] = 2.0 * pivot - out[v.frame:]
    return out


def _scale_profile(spec, depths):
    t_total = spec.frame_count
    sigma = np.ones(t_total)
    for v in spec.violations:
        if v.kind == "volume_breathing":
            if not (0.0 <= v.amplitude < 1.0) or v.period <= 0:
                raise IncompatibleViolation(
                    f"volume_breathing needs 0 <= A < 1 and period > 0, "
                    f"got A={v.amplitude}, period={v.period}")
            t = np.arange(t_total)
            sigma = sigma * (1.0 + v.amplitude * np.sin(2.0 * np.pi * t / v.period))
    for v in spec.violations:
        if v.kind == "scale_freeze":
            start = v.frame
            end = v.frame_end if v.frame_end is not None else t_total
            if not (0 <= start < end <= t_total):
                raise IncompatibleViolation(
                    f"scale_freeze span [{start}, {end}) outside video of {t_total} frames")
            ref = sigma[start]
            sigma[start:end] = ref * depths[start:end] / depths[start]
    return sigma


# --------------------------------------------------------------------------
# Ray casting
# --------------------------------------------------------------------------

def _box_halfspaces(size):
    a = np.vstack([np.eye(3), -np.eye(3)])
    half = np.asarray(size, dtype=np.float64) / 2.0
    b = np.concatenate([half, half])
    return a, b


def _ray_polytope_entry(origin, dirs, halfspaces, center, scale=1.0):
    """Entry parameter of rays into a scaled, translated convex polytope.

    ``dirs`` has shape (..., 3); the returned array is ``inf`` where a ray
    misses. The parameter equals camera depth when dirs have unit camera-z.
    """
    a, b = halfspaces
    rel = np.asarray(origin, dtype=np.float64) - np.asarray(center, dtype=np.float64)
    lead = dirs.shape[:-1]
    s_lo = np.full(lead, 1e-6)
    s_hi = np.full(lead, np.inf)
    feasible = np.ones(lead, dtype=bool)
    for i in range(len(b)):
        den = dirs @ a[i]
        num = scale * b[i] - float(a[i] @ rel)
        pos = den > 1e-12
        neg = den < -1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(pos | neg, num / np.where(den == 0, 1.0, den), 0.0)
        s_hi = np.where(pos, np.minimum(s_hi, q), s_hi)
        s_lo = np.where(neg, np.maximum(s_lo, q), s_lo)
        feasible &= ~((~pos & ~neg) & (num < 0))
    hit = feasible & (s_lo <= s_hi)
    return np.where(hit, s_lo, np.inf)


def _ray_ground(origin, dirs, ground_y, radius=None):
    dy = dirs[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (ground_y - origin[1]) / np.where(dy == 0, np.nan, dy)
    s = np.where(np.isfinite(s) & (s > 1e-6), s, np.inf)
    if radius is not None:
        finite = np.isfinite(s)
        hx = origin[0] + dirs[..., 0] * np.where(finite, s, 0.0)
        hz = origin[2] + dirs[..., 2] * np.where(finite, s, 0.0)
        s = np.where(finite & (np.hypot(hx, hz) <= radius), s, np.inf)
    return s


def _pixel_ray_dirs(width, height, intrinsics, rotation):
    us = (np.arange(width) - intrinsics.cx) / intrinsics.fx
    vs = (np.arange(height) - intrinsics.cy) / intrinsics.fy
    uu, vv = np.meshgrid(us, vs)
    d_cam = np.stack([uu, vv, np.ones_like(uu)], axis=-1)
    return d_cam @ rotation  # world dirs with unit camera-z


# --------------------------------------------------------------------------
# Textures (smooth, so sub-pixel resampling stays photometrically tiny)
# --------------------------------------------------------------------------

def _ground_color(points):
    # long wavelengths keep sub-pixel resampling photometrically tiny even
    # at grazing view angles, while depth corruption still shifts the phase
    # by whole units and lights up the reprojection audit
    x, z = points[..., 0], points[..., 2]
    wave = np.sin(2 * np.pi * x / 16.0) * np.sin(2 * np.pi * z / 16.0)
    r = 0.50 + 0.26 * wave
    g = 0.45 + 0.22 * np.sin(2 * np.pi * (x + z) / 24.0)
    b = 0.35 + 0.10 * np.sin(2 * np.pi * (x - z) / 20.0)
    return np.stack([r, g, b], axis=-1)


def _object_color(local_points):
    x, y, z = (local_points[..., 0], local_points[..., 1], local_points[..., 2])
    r = 0.62 + 0.30 * np.sin(2 * np.pi * x / 1.5) * np.cos(2 * np.pi * y / 1.5)
    g = 0.38 + 0.22 * np.sin(2 * np.pi * (y + z) / 2.0)
    b = 0.30 + 0.18 * np.cos(2 * np.pi * (x - z) / 2.5)
    return np.stack([r, g, b], axis=-1)


OCCLUDER_COLOR = np.array([0.28, 0.28, 0.32])
CLOUD_COLOR = np.array([0.82, 0.30, 0.25])


# --------------------------------------------------------------------------
# Rendering
# --------------------------------------------------------------------------

@dataclass
class RenderedBundle:
    bundle: PerceptionBundle
    sidecar: dict
    spec: SyntheticSceneSpec
    seed: int


def _track_points_local(obj):
    if obj.kind == "cloud":
        return np.asarray(obj.points, dtype=np.float64)
    n = max(2, obj.track_grid)
    half = np.asarray(obj.size, dtype=np.float64) / 2.0
    lin = {ax: np.linspace(-half[ax], half[ax], n) for ax in range(3)}
    pts = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            others = [ax for ax in range(3) if ax != axis]
            aa, bb = np.meshgrid(lin[others[0]], lin[others[1]])
            face = np.zeros((aa.size, 3))
            face[:, axis] = sign * half[axis]
            face[:, others[0]] = aa.ravel()
            face[:, others[1]] = bb.ravel()
            pts.append(face)
    pts = np.vstack(pts)
    # drop duplicated edge/corner samples
    _, idx = np.unique(np.round(pts, 9), axis=0, return_index=True)
    return pts[np.sort(idx)]


def _occluder_active(occ, t):
    if occ is None:
        return False
    end = occ.frame_end if occ.frame_end is not None else np.inf
    return occ.frame_start <= t < end


def _hull_mask(points_uv, width, height):
    """Pixels whose centers lie inside the convex hull of the given points."""
    if len(points_uv) < 3:
        return np.zeros((height, width), dtype=bool)
    try:
        hull = ConvexHull(points_uv)
    except QhullError:
        return np.zeros((height, width), dtype=bool)
    uu, vv = np.meshgrid(np.arange(width, dtype=np.float64),
                         np.arange(height, dtype=np.float64))
    inside = np.ones((height, width), dtype=bool)
    for a, b, c in hull.equations:
        inside &= (a * uu + b * vv + c) <= 1e-9
    return inside


def render_bundle(spec, seed=0):
    """Render a scene specification into an exact perception bundle."""
    t_total, width, height = spec.frame_count, spec.width, spec.height
    intr = spec.intrinsics
    poses = camera_poses(spec)
    path = _apply_path_violations(object_path(spec), spec.violations, t_total)
    center_depths = np.array([
        (poses.rotations[t] @ path[t] + poses.translations[t])[2]
        for t in range(t_total)])
    sigma = _scale_profile(spec, center_depths)

    rng = np.random.default_rng(seed)
    track_local = _track_points_local(spec.obj)
    n_tracks = len(track_local)
    jello_offsets = np.zeros((n_tracks, 3))
    jello_amp = 0.0
    has_jello = False
    for v in spec.violations:
        if v.kind == "jello":
            if not (0.0 < v.fraction <= 1.0) or v.amplitude < 0:
                raise IncompatibleViolation(
                    f"jello needs fraction in (0,1] and amplitude >= 0, "
                    f"got {v.fraction}, {v.amplitude}")
            has_jello = True
            chosen = rng.choice(n_tracks, size=max(1, round(v.fraction * n_tracks)),
                                replace=False)
            dirs = rng.normal(size=(len(chosen), 3))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            object_size = float(np.max(spec.obj.extent))
            jello_offsets[chosen] = v.amplitude * object_size * dirs
            jello_amp = v.amplitude

    box_hs = _box_halfspaces(spec.obj.size) if spec.obj.kind == "box" else None
    occ_hs = _box_halfspaces(spec.occluder.size) if spec.occluder is not None else None

    masks = np.zeros((t_total, height, width), dtype=bool)
    points = np.zeros((t_total, height, width, 3), dtype=np.float64)
    valid = np.zeros((t_total, height, width), dtype=bool)
    frames = (np.zeros((t_total, height, width, 3), dtype=np.uint8)
              if spec.emit_frames else None)
    track_uv = np.zeros((n_tracks, t_total, 2))
    track_conf = np.zeros((n_tracks, t_total))

    for t in range(t_total):
        rot, trans = poses.rotations[t], poses.translations[t]
        eye = -rot.T @ trans
        dirs = _pixel_ray_dirs(width, height, intr, rot)

        s_ground = (_ray_ground(eye, dirs, spec.ground_y, spec.ground_radius)
                    if spec.ground_y is not None
                    else np.full((height, width), np.inf))
        s_occ = (_ray_polytope_entry(eye, dirs, occ_hs, spec.occluder.center)
                 if _occluder_active(spec.occluder, t)
                 else np.full((height, width), np.inf))
        if spec.obj.kind == "box":
            s_obj = _ray_polytope_entry(eye, dirs, box_hs, path[t], sigma[t])
        else:
            s_obj = np.full((height, width), np.inf)

        depth = np.minimum(np.minimum(s_ground, s_occ), s_obj)
        hit = np.isfinite(depth)
        surf_obj = hit & (s_obj <= s_ground) & (s_obj <= s_occ) & np.isfinite(s_obj)
        surf_occ = hit & ~surf_obj & (s_occ <= s_ground) & np.isfinite(s_occ)
        surf_ground = hit & ~surf_obj & ~surf_occ

        world = eye + dirs * np.where(hit, depth, 0.0)[..., None]
        points[t][hit] = world[hit]
        valid[t][hit] = True

        if frames is not None:
            img = np.tile(SKY_COLOR, (height, width, 1))
            img[surf_ground] = _ground_color(world[surf_ground])
            img[surf_occ] = OCCLUDER_COLOR
            if spec.obj.kind == "box":
                local = (world[surf_obj] - path[t]) / sigma[t]
                img[surf_obj] = _object_color(local)
        else:
            img = None

        # tracked surface points: exact world positions and visibility
        world_pts = path[t] + sigma[t] * track_local
        if has_jello:
            world_pts = world_pts + jello_offsets * ((-1.0) ** t)
        unperturbed = path[t] + sigma[t] * track_local
        cam_pts = unperturbed @ rot.T + trans
        cam_pts_j = world_pts @ rot.T + trans
        vis = cam_pts[:, 2] > 1e-6
        uv = np.zeros((n_tracks, 2))
        zs = cam_pts_j[:, 2]
        ok = vis & (zs > 1e-6)
        uv[ok, 0] = intr.fx * cam_pts_j[ok, 0] / zs[ok] + intr.cx
        uv[ok, 1] = intr.fy * cam_pts_j[ok, 1] / zs[ok] + intr.cy
        rcols = round_half_away(uv[:, 0])
        rrows = round_half_away(uv[:, 1])
        # the rounded stamp pixel must exist too (the half-pixel edge band
        # would otherwise index one past the image)
        in_img = ok & (uv[:, 0] >= 0) & (uv[:, 0] < width) \
            & (uv[:, 1] >= 0) & (uv[:, 1] < height) \
            & (rcols >= 0) & (rcols <= width - 1) & (rrows >= 0) & (rrows <= height - 1)
        # self-occlusion: the unperturbed point must be the first object hit
        safe_z = np.where(cam_pts[:, 2:3] > 1e-6, cam_pts[:, 2:3], 1.0)
        pdirs_world = (cam_pts / safe_z) @ rot
        if spec.obj.kind == "box":
            entry = _ray_polytope_entry(eye, pdirs_world, box_hs, path[t], sigma[t])
            self_vis = np.abs(entry - cam_pts[:, 2]) <= 1e-6 * np.maximum(cam_pts[:, 2], 1.0)
        else:
            self_vis = np.ones(n_tracks, dtype=bool)
        if _occluder_active(spec.occluder, t):
            occ_entry = _ray_polytope_entry(eye, pdirs_world, occ_hs, spec.occluder.center)
            not_occluded = occ_entry >= cam_pts[:, 2] - 1e-9
        else:
            not_occluded = np.ones(n_tracks, dtype=bool)
        visible = in_img & self_vis & not_occluded
        track_conf[:, t] = visible.astype(np.float64)
        track_uv[:, t, 0] = np.where(visible, uv[:, 0], np.clip(uv[:, 0], 0.0, width - 1.0))
        track_uv[:, t, 1] = np.where(visible, uv[:, 1], np.clip(uv[:, 1], 0.0, height - 1.0))

        # object mask
        if spec.obj.kind == "box":
            masks[t] = surf_obj
        else:
            proj_pts = uv[ok]
            hull = _hull_mask(proj_pts, width, height)
            stamp_rows = round_half_away(uv[visible, 1])
            stamp_cols = round_half_away(uv[visible, 0])
            cloud_mask = hull.copy()
            cloud_mask[stamp_rows, stamp_cols] = True
            if _occluder_active(spec.occluder, t):
                occluder_in_front = np.isfinite(s_occ) & (s_occ < center_depths[t])
                cloud_mask &= ~occluder_in_front
            masks[t] = cloud_mask
            # hull gaps carry no reconstructed surface
            gap = cloud_mask & ~surf_occ
            valid[t][gap] = False

        # stamp exact world coordinates of visible tracked points
        vis_idx = np.flatnonzero(visible)
        if vis_idx.size:
            order = vis_idx[np.argsort(-zs[vis_idx], kind="stable")]
            rows = round_half_away(uv[order, 1])
            cols = round_half_away(uv[order, 0])
            points[t][rows, cols] = world_pts[order]
            valid[t][rows, cols] = True
            if spec.obj.kind == "cloud":
                masks[t][rows, cols] = True
            if frames is not None and spec.obj.kind == "cloud":
                img[rows, cols] = CLOUD_COLOR

        if frames is not None:
            frames[t] = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)

    _check_visibility_contract(masks, center_depths, t_total)

    meta = VideoMeta(frame_count=t_total, width=width, height=height,
                     fps=spec.fps, category=spec.category,
                     source_model=spec.source_model)
    bundle = PerceptionBundle(
        meta=meta,
        masks=MaskSequence(masks),
        tracks=TrackSet(uv=track_uv, confidence=track_conf,
                        track_ids=tuple(range(n_tracks))),
        pointmaps=PointmapSequence(points=points, valid=valid),
        intrinsics=intr,
        poses=poses,
        frames=frames)

    vp = _analytic_vp(spec, intr)
    sidecar = {
        "heights": [float(intr.fy * spec.obj.height * sigma[t] / center_depths[t])
                    for t in range(t_total)],
        "depths": [float(z) for z in center_depths],
        "centroids": [[float(x) for x in path[t]] for t in range(t_total)],
        "scale_profile": [float(s) for s in sigma],
        "vp": ([float(vp[0]), float(vp[1])] if vp is not None else None),
        "object_height": spec.obj.height,
        "jello_amplitude": jello_amp,
    }
    return RenderedBundle(bundle=bundle, sidecar=sidecar, spec=spec, seed=seed)


def _analytic_vp(spec, intr):
    if len(spec.motion) != 1 or spec.motion[0].kind != "constant_velocity":
        return None
    vel = np.asarray(spec.motion[0].velocity, dtype=np.float64)
    norm = np.linalg.norm(vel)
    if norm == 0 or abs(vel[2]) <= 1e-9 * norm:
        return None
    return np.array([intr.fx * vel[0] / vel[2] + intr.cx,
                     intr.fy * vel[1] / vel[2] + intr.cy])


def _check_visibility_contract(masks, center_depths, t_total):
    in_front = (center_depths > 0.1).sum()
    if in_front < math.ceil(0.9 * t_total):
        raise ObjectOutOfView(
            f"object in front of the camera for only {in_front}/{t_total} frames")
    nonempty = 0
    for t in range(t_total):
        mask = masks[t]
        if not mask.any():
            continue
        nonempty += 1
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        if rows[-1] - rows[0] + 1 < 4 or cols[-1] - cols[0] + 1 < 4:
            raise ObjectOutOfView(f"frame {t}: footprint smaller than 4x4 pixels")
    if nonempty == 0:
        raise ObjectOutOfView("object never visible")


def inject_violation(rendered, violation):
    """Re-render the scene with one more violation; same seed, so a no-op
    violation reproduces the input bundle byte for byte."""
    return render_bundle(rendered.spec.with_violation(violation), rendered.seed)


def write_rendered(rendered, out_dir):
    """Write bundle directory plus the analytic sidecar."""
    out = write_bundle(rendered.bundle, out_dir)
    (out / "sidecar.json").write_text(
        json.dumps(rendered.sidecar, indent=2, sort_keys=True) + "\n")
    return out
