"""Neural export backend: text-to-box prompting, mask propagation,
monocular 3D uplifting, and dense point tracking.

Every stage is import-guarded: a missing package or checkpoint raises
ModelUnavailable with the component named, so callers can fall back to
the classical backend or fail loudly. This module deliberately contains
no silent stubs; if the stack is not installed, nothing is exported.
"""

from __future__ import annotations

import numpy as np

from .errors import ModelUnavailable, ReconstructionFailed, SubjectNotFound
from .seeding import seed_anchors


def _load_florence(config):
    try:
        import torch
        from transformers import AutoModelForCausalLM, AutoProcessor
    except ImportError as exc:
        raise ModelUnavailable(f"text-to-box model stack missing: {exc}") from exc
    try:
        processor = AutoProcessor.from_pretrained(config.florence_model,
                                                  trust_remote_code=True)
        model = AutoModelForCausalLM.from_pretrained(
            config.florence_model, trust_remote_code=True).to(config.device)
    except Exception as exc:  # weights absent, offline hub, etc.
        raise ModelUnavailable(
            f"cannot load text-to-box model {config.florence_model!r}: {exc}") from exc
    return processor, model


def _detect_box(frames, config):
    import torch
    processor, model = _load_florence(config)
    prompt = "<OPEN_VOCABULARY_DETECTION>" + config.text_query
    inputs = processor(text=prompt, images=frames[0], return_tensors="pt").to(config.device)
    with torch.no_grad():
        out = model.generate(input_ids=inputs["input_ids"],
                             pixel_values=inputs["pixel_values"],
                             max_new_tokens=256)
    text = processor.batch_decode(out, skip_special_tokens=False)[0]
    parsed = processor.post_process_generation(
        text, task="<OPEN_VOCABULARY_DETECTION>",
        image_size=(frames.shape[2], frames.shape[1]))
    boxes = parsed.get("<OPEN_VOCABULARY_DETECTION>", {}).get("bboxes", [])
    if not boxes:
        raise SubjectNotFound(f"no box found for query {config.text_query!r}")
    return boxes[0]


def _propagate_masks(frames, box, config):
    try:
        from sam2.build_sam import build_sam2_video_predictor
    except ImportError as exc:
        raise ModelUnavailable(f"mask propagation model missing: {exc}") from exc
    if not config.sam2_checkpoint:
        raise ModelUnavailable("sam2_checkpoint not configured")
    predictor = build_sam2_video_predictor(checkpoint=config.sam2_checkpoint,
                                           device=config.device)
    state = predictor.init_state_from_frames(frames)
    predictor.add_new_box(state, frame_idx=0, obj_id=1, box=np.asarray(box))
    masks = np.zeros(frames.shape[:3], dtype=bool)
    for frame_idx, _, logits in predictor.propagate_in_video(state):
        masks[frame_idx] = (logits[0] > 0).cpu().numpy()
    return masks


def _uplift_pointmaps(frames, config):
    try:
        import megasam
    except ImportError as exc:
        raise ModelUnavailable(f"3D uplifting model missing: {exc}") from exc
    if not config.megasam_checkpoint:
        raise ModelUnavailable("megasam_checkpoint not configured")
    result = megasam.run(frames, checkpoint=config.megasam_checkpoint,
                         device=config.device)
    if result is None or not np.isfinite(result.pointmaps).any():
        raise ReconstructionFailed("3D uplifting produced no finite geometry")
    return result.pointmaps, result.valid, result.intrinsics, result.poses


def _track_points(frames, masks, config):
    try:
        import torch
    except ImportError as exc:
        raise ModelUnavailable(f"point tracker missing: {exc}") from exc
    try:
        tracker = torch.hub.load("facebookresearch/co-tracker",
                                 config.cotracker_model).to(config.device)
    except Exception as exc:
        raise ModelUnavailable(
            f"cannot load point tracker {config.cotracker_model!r}: {exc}") from exc
    import cv2
    gray0 = cv2.cvtColor(frames[0], cv2.COLOR_RGB2GRAY)
    seeds = seed_anchors(gray0, masks[0], target=config.target_anchors,
                         sift_max=config.sift_max_features,
                         shi_quality=config.shi_tomasi_quality,
                         grid_stride=config.grid_stride)
    video = torch.from_numpy(frames).permute(0, 3, 1, 2)[None].float().to(config.device)
    queries = torch.cat([torch.zeros(len(seeds), 1),
                         torch.from_numpy(seeds)], dim=1)[None].to(config.device)
    with torch.no_grad():
        tracks, visibility = tracker(video, queries=queries)
    uv = tracks[0].permute(1, 0, 2).cpu().numpy().astype(np.float64)
    conf = visibility[0].permute(1, 0).cpu().numpy().astype(np.float64)
    return uv, conf


def export_neural(frames, fps, config):
    """Full neural pipeline; returns (masks, uv, conf, pointmaps, valid,
    intrinsics, poses)."""
    box = _detect_box(frames, config)
    masks = _propagate_masks(frames, box, config)
    pointmaps, valid, intrinsics, poses = _uplift_pointmaps(frames, config)
    uv, conf = _track_points(frames, masks, config)
    return masks, uv, conf, pointmaps, valid, intrinsics, poses
