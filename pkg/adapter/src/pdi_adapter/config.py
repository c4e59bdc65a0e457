"""Adapter configuration.

The anchor seeding cascade (feature detector fallbacks and the uniform
grid) and the tracking thresholds are exposed here so exports can be
tuned per dataset without touching code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class AdapterConfig:
    text_query: str
    backend: str = "auto"            # auto | classical | neural
    device: str = "cpu"
    fps: float = 24.0                # used when the input is a frame directory
    category: str = "uncategorized"
    source_model: str = "unknown"
    # anchor seeding cascade
    target_anchors: int = 64
    sift_max_features: int = 48
    shi_tomasi_quality: float = 0.01
    grid_stride: int = 12
    # classical segmentation
    diff_threshold: float = 18.0     # intensity units on [0, 255]
    min_subject_area: int = 60       # pixels
    # tracking
    fb_error_limit: float = 1.5      # forward-backward pixels
    # neural checkpoints (paths or hub identifiers)
    florence_model: str = "microsoft/Florence-2-base"
    sam2_checkpoint: str = ""
    megasam_checkpoint: str = ""
    cotracker_model: str = "cotracker3_offline"

    def __post_init__(self):
        if not self.text_query.strip():
            raise ValueError("text_query must be non-empty")
        if self.backend not in ("auto", "classical", "neural"):
            raise ValueError(f"unknown backend {self.backend!r}")


def load_config(path, **overrides):
    doc = json.loads(Path(path).read_text())
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return AdapterConfig(**doc)
