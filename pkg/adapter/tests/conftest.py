"""Sample-clip generator: a textured subject translating over a static
textured background, written as a frame directory."""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image


def make_clip(out_dir, t_total=72, width=160, height=120, step=(1.2, 0.7),
              start=(20.0, 30.0), box=(26, 20), seed=0):
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    background = (70 + 25 * np.sin(2 * np.pi * xx / 40.0)
                  * np.sin(2 * np.pi * yy / 32.0)).astype(np.float64)
    # checkerboard texture gives the tracker corners to hold on to
    checker = ((np.arange(box[1])[:, None] // 4 + np.arange(box[0])[None, :] // 4) % 2)
    subject = 170.0 + 60.0 * checker + rng.normal(0, 2.0, size=checker.shape)
    truth_boxes = []
    for t in range(t_total):
        frame = np.stack([background, background * 0.95, background * 0.9], axis=-1)
        x0 = int(round(start[0] + step[0] * t))
        y0 = int(round(start[1] + step[1] * t))
        frame[y0:y0 + box[1], x0:x0 + box[0], 0] = subject
        frame[y0:y0 + box[1], x0:x0 + box[0], 1] = subject * 0.8
        frame[y0:y0 + box[1], x0:x0 + box[0], 2] = subject * 0.5
        truth_boxes.append((x0, y0, box[0], box[1]))
        img = np.clip(frame, 0, 255).astype(np.uint8)
        Image.fromarray(img, mode="RGB").save(out_dir / f"{t:06d}.png")
    return truth_boxes


@pytest.fixture(scope="session")
def sample_clip(tmp_path_factory):
    clip_dir = tmp_path_factory.mktemp("clips") / "sample"
    boxes = make_clip(clip_dir)
    return clip_dir, boxes
