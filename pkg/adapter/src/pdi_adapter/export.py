"""Export orchestration: video in, canonical bundle directory out."""

from __future__ import annotations

import logging
from pathlib import Path

from . import bundle_writer, classical, video_io
from .errors import ModelUnavailable

log = logging.getLogger("pdi_adapter")


def export_bundle(video_path, out_dir, config):
    """Run the configured perception backend and write a bundle.

    Backend "auto" tries the neural stack first and falls back to the
    classical backend when models are unavailable. Returns the bundle
    directory path.
    """
    frames, fps = video_io.load_frames(video_path, fallback_fps=config.fps)
    t_total, height, width = frames.shape[:3]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    backend = config.backend
    result_3d = None
    if backend in ("auto", "neural"):
        try:
            from . import neural
            masks, uv, conf, pointmaps, valid, intrinsics, poses = \
                neural.export_neural(frames, fps, config)
            result_3d = (pointmaps, valid, intrinsics, poses)
        except ModelUnavailable as exc:
            if backend == "neural":
                raise
            log.info("neural stack unavailable (%s); using classical backend", exc)
            backend = "classical"
    if backend == "classical" or (backend == "auto" and result_3d is None):
        masks, uv, conf = classical.export_classical(frames, fps, config)

    bundle_writer.write_meta(out, t_total, width, height, fps,
                             config.category, config.source_model)
    bundle_writer.write_masks(out, masks)
    bundle_writer.write_tracks(out, uv, conf)
    if result_3d is not None:
        pointmaps, valid, intrinsics, poses = result_3d
        bundle_writer.write_pointmaps(out, pointmaps, valid)
        bundle_writer.write_camera(out, intrinsics, poses)
    log.info("exported %d frames, %d tracks -> %s", t_total, len(uv), out)
    return out
