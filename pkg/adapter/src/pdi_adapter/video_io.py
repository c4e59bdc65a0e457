"""Frame loading from video files or frame directories."""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from .errors import VideoUnreadable

_FRAME_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


def load_frames(path, fallback_fps=24.0):
    """Return (frames (T, H, W, 3) RGB uint8, fps).

    A directory is read as sorted image frames at ``fallback_fps``; any
    other path is decoded as a video file.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in _FRAME_SUFFIXES)
        if len(files) < 2:
            raise VideoUnreadable(f"{path}: needs at least 2 frame images")
        frames = []
        for f in files:
            img = cv2.imread(str(f), cv2.IMREAD_COLOR)
            if img is None:
                raise VideoUnreadable(f"{f}: undecodable image")
            frames.append(cv2.cvtColor(img, cv2.COLOR_BGR2RGB))
        shapes = {fr.shape for fr in frames}
        if len(shapes) != 1:
            raise VideoUnreadable(f"{path}: frames disagree on size: {shapes}")
        return np.stack(frames), float(fallback_fps)

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise VideoUnreadable(f"{path}: cannot open video")
    fps = cap.get(cv2.CAP_PROP_FPS) or fallback_fps
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    cap.release()
    if len(frames) < 2:
        raise VideoUnreadable(f"{path}: decoded {len(frames)} frames, need >= 2")
    return np.stack(frames), float(fps if fps > 0 else fallback_fps)
