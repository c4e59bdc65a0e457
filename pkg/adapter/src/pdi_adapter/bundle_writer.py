"""Writers for the canonical bundle directory layout.

This adapter communicates with the auditing engine only through its file
formats: meta.json, masks/%06d.png (8-bit, 0/255), tracks.csv
(track_id,frame,u,v,confidence with complete frame coverage per track),
and optionally pointmap.bin / pointmap_valid.bin / camera.json when 3D
evidence exists. Deliberately re-implemented here rather than imported.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

POINTMAP_MAGIC = b"PDIBPMAP"


def write_meta(out_dir, t_total, width, height, fps, category, source_model):
    doc = {"T": int(t_total), "W": int(width), "H": int(height),
           "fps": float(fps), "category": category, "source_model": source_model}
    (Path(out_dir) / "meta.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_masks(out_dir, masks):
    mask_dir = Path(out_dir) / "masks"
    mask_dir.mkdir(parents=True, exist_ok=True)
    for t in range(len(masks)):
        img = Image.fromarray((masks[t].astype(np.uint8)) * 255, mode="L")
        img.save(mask_dir / f"{t:06d}.png")


def write_tracks(out_dir, uv, confidence):
    with open(Path(out_dir) / "tracks.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["track_id", "frame", "u", "v", "confidence"])
        for i in range(uv.shape[0]):
            for t in range(uv.shape[1]):
                writer.writerow([i, t, repr(float(uv[i, t, 0])),
                                 repr(float(uv[i, t, 1])),
                                 repr(float(confidence[i, t]))])


def write_pointmaps(out_dir, pointmaps, valid):
    out = Path(out_dir)
    for name, array, dtype in (("pointmap.bin", pointmaps, np.dtype("<f4")),
                               ("pointmap_valid.bin",
                                valid.astype(np.uint8), np.uint8)):
        arr = np.ascontiguousarray(array)
        shape = arr.shape if arr.ndim == 4 else arr.shape + (1,)
        with open(out / name, "wb") as fh:
            fh.write(POINTMAP_MAGIC + struct.pack("<4I", *shape))
            fh.write(arr.astype(dtype).tobytes(order="C"))


def write_camera(out_dir, intrinsics, poses=None):
    doc = {"fx": float(intrinsics["fx"]), "fy": float(intrinsics["fy"]),
           "cx": float(intrinsics["cx"]), "cy": float(intrinsics["cy"])}
    if poses is not None:
        doc["poses"] = [{"R": np.asarray(r).tolist(), "t": np.asarray(t).tolist()}
                        for r, t in poses]
    (Path(out_dir) / "camera.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n")
