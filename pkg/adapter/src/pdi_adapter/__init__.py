"""Perception-export adapter: raw videos to canonical evidence bundles.

The auditing engine never depends on this package; the interchange file
formats and the `pdi` CLI are the only contract between the two.
"""

from .config import AdapterConfig, load_config
from .errors import (ExportError, ModelUnavailable, ReconstructionFailed,
                     SubjectNotFound, VideoUnreadable)
from .export import export_bundle

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "load_config", "export_bundle", "ExportError",
           "ModelUnavailable", "SubjectNotFound", "ReconstructionFailed",
           "VideoUnreadable"]
