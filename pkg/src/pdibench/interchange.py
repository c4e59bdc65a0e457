"""Canonical on-disk representation of per-video perception evidence.

A bundle is a directory:

    meta.json            T, W, H, fps, category, source_model (+ optional vp_bg)
    masks/%06d.png       8-bit single channel, 0 = background, 255 = foreground
    pointmap.bin         magic "PDIBPMAP", uint32-LE T,H,W,3, float32-LE data
    pointmap_valid.bin   magic "PDIBPMAP", uint32-LE T,H,W,1, uint8 0/1 data
    tracks.csv           header: track_id,frame,u,v,confidence
    camera.json          fx,fy,cx,cy and optional per-frame poses (R row-major)
    frames/%06d.png      optional 8-bit RGB frames
    sidecar.json         optional, written by the synthetic renderer only

Masks and tracks are mandatory; pointmaps, intrinsics, poses and frames are
optional and their absence selects the degraded evaluation paths. Bundles
are immutable after load and safe to share across workers.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CorruptTensor, DimensionMismatch, MissingMeta, PdiError

POINTMAP_MAGIC = b"PDIBPMAP"

CATEGORIES = (
    "longitudinal_convergence",
    "dynamic_tracking",
    "biological_motion",
    "curved_motion",
    "partial_occlusion",
    "uncategorized",
)

DEFAULT_CONF_THRESHOLD = 0.5
DEFAULT_JUMP_FRACTION = 0.2


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VideoMeta:
    frame_count: int
    width: int
    height: int
    fps: float
    category: str = "uncategorized"
    source_model: str = "unknown"
    vp_bg: tuple[float, float] | None = None

    def __post_init__(self):
        if self.frame_count < 2:
            raise DimensionMismatch(f"frame_count must be >= 2, got {self.frame_count}")
        if self.width < 8 or self.height < 8:
            raise DimensionMismatch(f"image must be at least 8x8, got {self.width}x{self.height}")
        if not self.fps > 0:
            raise DimensionMismatch(f"fps must be positive, got {self.fps}")
        if self.category not in CATEGORIES:
            raise DimensionMismatch(
                f"category {self.category!r} not one of {CATEGORIES}")

    @property
    def diagonal(self):
        return float(np.hypot(self.width, self.height))


@dataclass(frozen=True)
class MaskSequence:
    """Per-frame binary masks, shape (T, H, W) bool."""
    masks: np.ndarray

    @property
    def frame_valid(self):
        return self.masks.any(axis=(1, 2))


@dataclass(frozen=True)
class PointmapSequence:
    """World-space coordinates (T, H, W, 3) with validity (T, H, W)."""
    points: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise DimensionMismatch(f"focal lengths must be positive, got {self.fx}, {self.fy}")


@dataclass(frozen=True)
class CameraPoseSequence:
    """World-to-camera rotations (T, 3, 3) and translations (T, 3)."""
    rotations: np.ndarray
    translations: np.ndarray

    def camera_points(self, t, world_points):
        """Transform (N, 3) world points into the frame-t camera frame."""
        pts = np.asarray(world_points, dtype=np.float64)
        return pts @ self.rotations[t].T + self.translations[t]


@dataclass(frozen=True)
class TrackSet:
    """N pixel tracks over T frames: uv (N, T, 2), confidence (N, T)."""
    uv: np.ndarray
    confidence: np.ndarray
    track_ids: tuple = ()

    def __len__(self):
        return self.uv.shape[0]

    @property
    def frame_count(self):
        return self.uv.shape[1]


@dataclass(frozen=True)
class PerceptionBundle:
    meta: VideoMeta
    masks: MaskSequence
    tracks: TrackSet
    pointmaps: PointmapSequence | None = None
    intrinsics: CameraIntrinsics | None = None
    poses: CameraPoseSequence | None = None
    frames: np.ndarray | None = None  # (T, H, W, 3) uint8, optional
    source_dir: Path | None = None

    @property
    def has_3d(self):
        return self.pointmaps is not None


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    path: Path
    category: str
    source_model: str
    is_ground_truth: bool = False


@dataclass
class Manifest:
    entries: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


# --------------------------------------------------------------------------
# Binary tensor codec
# --------------------------------------------------------------------------

def _write_tensor(path, array, dtype):
    arr = np.ascontiguousarray(array)
    shape = arr.shape
    if len(shape) == 3:
        shape = shape + (1,)
    header = POINTMAP_MAGIC + struct.pack("<4I", *shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype(dtype).tobytes(order="C"))


def _read_tensor(path, dtype, channels):
    raw = path.read_bytes()
    if len(raw) < 24 or raw[:8] != POINTMAP_MAGIC:
        raise CorruptTensor(f"{path.name}: bad magic header")
    t, h, w, c = struct.unpack("<4I", raw[8:24])
    if c != channels:
        raise CorruptTensor(f"{path.name}: expected {channels} channels, header says {c}")
    count = t * h * w * c
    data = np.frombuffer(raw, dtype=dtype, offset=24)
    if data.size != count:
        raise CorruptTensor(
            f"{path.name}: payload holds {data.size} values, header implies {count}")
    return data.reshape(t, h, w, c), (t, h, w)


# --------------------------------------------------------------------------
# Loading
# --------------------------------------------------------------------------

def _load_meta(bundle_dir):
    meta_path = bundle_dir / "meta.json"
    if not meta_path.is_file():
        raise MissingMeta(f"{bundle_dir}: meta.json not found")
    try:
        raw = json.loads(meta_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MissingMeta(f"{meta_path}: unreadable meta ({exc})") from exc
    try:
        vp_bg = raw.get("vp_bg")
        return VideoMeta(
            frame_count=int(raw["T"]),
            width=int(raw["W"]),
            height=int(raw["H"]),
            fps=float(raw["fps"]),
            category=raw.get("category", "uncategorized"),
            source_model=raw.get("source_model", "unknown"),
            vp_bg=tuple(float(x) for x in vp_bg) if vp_bg is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MissingMeta(f"{meta_path}: malformed meta ({exc})") from exc


def _load_masks(bundle_dir, meta):
    mask_dir = bundle_dir / "masks"
    masks = np.zeros((meta.frame_count, meta.height, meta.width), dtype=bool)
    for t in range(meta.frame_count):
        path = mask_dir / f"{t:06d}.png"
        if not path.is_file():
            raise CorruptTensor(f"masks/{path.name}: missing mask frame")
        try:
            img = np.asarray(Image.open(path))
        except OSError as exc:
            raise CorruptTensor(f"masks/{path.name}: undecodable ({exc})") from exc
        if img.ndim != 2:
            raise CorruptTensor(f"masks/{path.name}: mask must be single-channel")
        if img.shape != (meta.height, meta.width):
            raise DimensionMismatch(
                f"masks/{path.name}: mask is {img.shape[1]}x{img.shape[0]}, "
                f"video is {meta.width}x{meta.height}")
        masks[t] = img > 127
    return MaskSequence(masks)


def _load_pointmaps(bundle_dir, meta):
    pm_path = bundle_dir / "pointmap.bin"
    if not pm_path.is_file():
        return None
    valid_path = bundle_dir / "pointmap_valid.bin"
    if not valid_path.is_file():
        raise CorruptTensor("pointmap_valid.bin: missing alongside pointmap.bin")
    points, shape = _read_tensor(pm_path, np.dtype("<f4"), 3)
    valid, vshape = _read_tensor(valid_path, np.uint8, 1)
    expected = (meta.frame_count, meta.height, meta.width)
    if shape != expected:
        raise DimensionMismatch(
            f"pointmap.bin: tensor shape {shape} does not match video {expected}")
    if vshape != expected:
        raise DimensionMismatch(
            f"pointmap_valid.bin: tensor shape {vshape} does not match video {expected}")
    valid = valid[..., 0].astype(bool)
    pts = points.astype(np.float64)
    if not np.isfinite(pts[valid]).all():
        raise CorruptTensor("pointmap.bin: non-finite coordinates marked valid")
    return PointmapSequence(points=pts, valid=valid)


def _load_tracks(bundle_dir, meta):
    path = bundle_dir / "tracks.csv"
    if not path.is_file():
        raise CorruptTensor("tracks.csv: missing")
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected_fields = ["track_id", "frame", "u", "v", "confidence"]
        if reader.fieldnames != expected_fields:
            raise CorruptTensor(f"tracks.csv: header must be {','.join(expected_fields)}")
        for rec in reader:
            try:
                tid = int(rec["track_id"])
                frame = int(rec["frame"])
                u, v = float(rec["u"]), float(rec["v"])
                conf = float(rec["confidence"])
            except (TypeError, ValueError) as exc:
                raise CorruptTensor(f"tracks.csv: bad row {rec} ({exc})") from exc
            rows.setdefault(tid, {})[frame] = (u, v, conf)
    track_ids = sorted(rows)
    n = len(track_ids)
    uv = np.zeros((n, meta.frame_count, 2), dtype=np.float64)
    conf = np.zeros((n, meta.frame_count), dtype=np.float64)
    for i, tid in enumerate(track_ids):
        per_frame = rows[tid]
        if sorted(per_frame) != list(range(meta.frame_count)):
            raise CorruptTensor(f"tracks.csv: track {tid} does not cover every frame")
        for t in range(meta.frame_count):
            u, v, c = per_frame[t]
            if not (0.0 <= c <= 1.0):
                raise CorruptTensor(f"tracks.csv: track {tid} confidence {c} outside [0,1]")
            if c > 0 and not (0 <= u < meta.width and 0 <= v < meta.height):
                raise CorruptTensor(
                    f"tracks.csv: track {tid} frame {t} at ({u}, {v}) outside image")
            uv[i, t] = (u, v)
            conf[i, t] = c
    return TrackSet(uv=uv, confidence=conf, track_ids=tuple(track_ids))


def _load_camera(bundle_dir, meta):
    path = bundle_dir / "camera.json"
    if not path.is_file():
        return None, None
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptTensor(f"camera.json: unreadable ({exc})") from exc
    try:
        intr = CameraIntrinsics(fx=float(raw["fx"]), fy=float(raw["fy"]),
                                cx=float(raw["cx"]), cy=float(raw["cy"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptTensor(f"camera.json: malformed intrinsics ({exc})") from exc
    if not (0 <= intr.cx < meta.width and 0 <= intr.cy < meta.height):
        raise DimensionMismatch(
            f"camera.json: principal point ({intr.cx}, {intr.cy}) outside image")
    poses = None
    if "poses" in raw:
        entries = raw["poses"]
        if len(entries) != meta.frame_count:
            raise DimensionMismatch(
                f"camera.json: {len(entries)} poses for {meta.frame_count} frames")
        rot = np.zeros((meta.frame_count, 3, 3), dtype=np.float64)
        trans = np.zeros((meta.frame_count, 3), dtype=np.float64)
        for t, entry in enumerate(entries):
            r = np.asarray(entry["R"], dtype=np.float64)
            if r.shape != (3, 3):
                raise CorruptTensor(f"camera.json: pose {t} rotation is not 3x3")
            if abs(np.linalg.det(r) - 1.0) > 1e-6 or np.abs(r @ r.T - np.eye(3)).max() > 1e-6:
                raise CorruptTensor(f"camera.json: pose {t} rotation not orthonormal")
            rot[t] = r
            trans[t] = np.asarray(entry["t"], dtype=np.float64)
        poses = CameraPoseSequence(rotations=rot, translations=trans)
    return intr, poses


def _load_frames(bundle_dir, meta):
    frame_dir = bundle_dir / "frames"
    if not frame_dir.is_dir():
        return None
    frames = np.zeros((meta.frame_count, meta.height, meta.width, 3), dtype=np.uint8)
    for t in range(meta.frame_count):
        path = frame_dir / f"{t:06d}.png"
        if not path.is_file():
            raise CorruptTensor(f"frames/{path.name}: missing RGB frame")
        img = np.asarray(Image.open(path).convert("RGB"))
        if img.shape[:2] != (meta.height, meta.width):
            raise DimensionMismatch(
                f"frames/{path.name}: frame is {img.shape[1]}x{img.shape[0]}, "
                f"video is {meta.width}x{meta.height}")
        frames[t] = img
    return frames


def load_bundle(path):
    """Load and validate a bundle directory into a PerceptionBundle."""
    bundle_dir = Path(path)
    if not bundle_dir.is_dir():
        raise MissingMeta(f"{bundle_dir}: not a directory")
    meta = _load_meta(bundle_dir)
    masks = _load_masks(bundle_dir, meta)
    pointmaps = _load_pointmaps(bundle_dir, meta)
    tracks = _load_tracks(bundle_dir, meta)
    intrinsics, poses = _load_camera(bundle_dir, meta)
    frames = _load_frames(bundle_dir, meta)
    return PerceptionBundle(
        meta=meta, masks=masks, tracks=tracks, pointmaps=pointmaps,
        intrinsics=intrinsics, poses=poses, frames=frames, source_dir=bundle_dir)


# --------------------------------------------------------------------------
# Writing
# --------------------------------------------------------------------------

def write_bundle(bundle, path):
    """Write a PerceptionBundle as a canonical bundle directory."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    meta = bundle.meta
    meta_doc = {
        "T": meta.frame_count, "W": meta.width, "H": meta.height,
        "fps": meta.fps, "category": meta.category,
        "source_model": meta.source_model,
    }
    if meta.vp_bg is not None:
        meta_doc["vp_bg"] = list(meta.vp_bg)
    (out / "meta.json").write_text(json.dumps(meta_doc, indent=2, sort_keys=True) + "\n")

    mask_dir = out / "masks"
    mask_dir.mkdir(exist_ok=True)
    for t in range(meta.frame_count):
        img = Image.fromarray((bundle.masks.masks[t] * np.uint8(255)), mode="L")
        img.save(mask_dir / f"{t:06d}.png")

    with open(out / "tracks.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["track_id", "frame", "u", "v", "confidence"])
        ids = bundle.tracks.track_ids or tuple(range(len(bundle.tracks)))
        for i, tid in enumerate(ids):
            for t in range(meta.frame_count):
                u, v = bundle.tracks.uv[i, t]
                writer.writerow([tid, t, repr(float(u)), repr(float(v)),
                                 repr(float(bundle.tracks.confidence[i, t]))])

    if bundle.pointmaps is not None:
        _write_tensor(out / "pointmap.bin", bundle.pointmaps.points, np.dtype("<f4"))
        _write_tensor(out / "pointmap_valid.bin",
                      bundle.pointmaps.valid.astype(np.uint8), np.uint8)

    if bundle.intrinsics is not None:
        cam_doc = {
            "fx": bundle.intrinsics.fx, "fy": bundle.intrinsics.fy,
            "cx": bundle.intrinsics.cx, "cy": bundle.intrinsics.cy,
        }
        if bundle.poses is not None:
            cam_doc["poses"] = [
                {"R": bundle.poses.rotations[t].tolist(),
                 "t": bundle.poses.translations[t].tolist()}
                for t in range(meta.frame_count)
            ]
        (out / "camera.json").write_text(json.dumps(cam_doc, indent=2, sort_keys=True) + "\n")

    if bundle.frames is not None:
        frame_dir = out / "frames"
        frame_dir.mkdir(exist_ok=True)
        for t in range(meta.frame_count):
            Image.fromarray(bundle.frames[t], mode="RGB").save(frame_dir / f"{t:06d}.png")
    return out


# --------------------------------------------------------------------------
# Track sanitation
# --------------------------------------------------------------------------

def sanitize_tracks(tracks, meta, conf_threshold=DEFAULT_CONF_THRESHOLD,
                    jump_fraction=DEFAULT_JUMP_FRACTION):
    """Drop unreliable tracks; never modifies surviving coordinates.

    A track is dropped when its confidence is in (0, conf_threshold] at any
    frame (confidence 0 marks the point as absent rather than unreliable),
    or when it moves more than jump_fraction of the image diagonal between
    two consecutive frames where it is present. Idempotent.
    """
    if not (0 < conf_threshold <= 1) or not (0 < jump_fraction <= 1):
        raise ValueError("thresholds must be in (0, 1]")
    if len(tracks) == 0:
        return tracks
    conf = tracks.confidence
    uv = tracks.uv
    unreliable = ((conf > 0) & (conf <= conf_threshold)).any(axis=1)
    step = np.linalg.norm(np.diff(uv, axis=1), axis=2)
    both_present = (conf[:, :-1] > 0) & (conf[:, 1:] > 0)
    max_jump = jump_fraction * meta.diagonal
    jumpy = (both_present & (step > max_jump)).any(axis=1)
    keep = ~(unreliable | jumpy)
    ids = tracks.track_ids or tuple(range(len(tracks)))
    return TrackSet(uv=uv[keep], confidence=conf[keep],
                    track_ids=tuple(tid for tid, k in zip(ids, keep) if k))


# --------------------------------------------------------------------------
# Manifest
# --------------------------------------------------------------------------

def load_manifest(path):
    manifest_path = Path(path)
    try:
        raw = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MissingMeta(f"{manifest_path}: unreadable manifest ({exc})") from exc
    entries = []
    seen = set()
    for rec in raw.get("videos", []):
        vid = str(rec["video_id"])
        if vid in seen:
            raise MissingMeta(f"{manifest_path}: duplicate video_id {vid!r}")
        seen.add(vid)
        bundle_path = Path(rec["path"])
        if not bundle_path.is_absolute():
            bundle_path = manifest_path.parent / bundle_path
        if not bundle_path.is_dir():
            raise MissingMeta(f"{manifest_path}: bundle path {bundle_path} not found")
        entries.append(ManifestEntry(
            video_id=vid, path=bundle_path,
            category=rec.get("category", "uncategorized"),
            source_model=rec.get("source_model", "unknown"),
            is_ground_truth=bool(rec.get("is_ground_truth", False))))
    return Manifest(entries=entries)


def write_manifest(entries, path):
    doc = {"videos": [
        {"video_id": e.video_id, "path": str(e.path), "category": e.category,
         "source_model": e.source_model, "is_ground_truth": e.is_ground_truth}
        for e in entries]}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# Schema validation (CLI `validate`)
# --------------------------------------------------------------------------

def validate_bundle(path):
    """Check a bundle directory; returns (errors, warnings) string lists."""
    errors, warnings = [], []
    try:
        bundle = load_bundle(path)
    except PdiError as exc:
        return [f"{type(exc).__name__}: {exc}"], warnings
    if len(bundle.tracks) == 0:
        warnings.append("no tracks: rigidity will degrade to the no-evidence case")
    if bundle.frames is not None and (bundle.poses is None or bundle.pointmaps is None):
        warnings.append("frames present but poses/pointmaps missing: "
                        "reprojection audit unavailable")
    if not bundle.masks.frame_valid.any():
        errors.append("NoValidFrames: every mask is empty")
    return errors, warnings
