"""Scale-depth alignment residual.

For a rigid object under a pinhole camera the product of projected height
and depth is constant, so its log is audited against a baseline taken over
the first frames:

    s_t   = ln(max(h_t, eps)) + ln(max(Z_t, eps))
    s_ref = median(s_0 .. s_{min(5,T)-1})
    eps_scale(t) = |s_t - s_ref|   for t = 1 .. T-1

The component value is the RMSE of those T-1 residuals. Working in log
space makes expansions and contractions cost the same and makes the
residual invariant to a global depth rescale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientFrames

LOG_FLOOR = 1e-6
BASELINE_FRAMES = 5


@dataclass(frozen=True)
class ScaleResidualSeries:
    residuals: np.ndarray  # (T-1,) values for frames 1..T-1
    baseline: float        # s_ref, log units
    rmse: float


def compute_scale_residuals(obs):
    """Scale residual series from an observation series with 3D depths."""
    if obs.depths is None:
        raise InsufficientFrames("scale residual needs 3D depths; none available")
    t_total = obs.frame_count
    if t_total < 2:
        raise InsufficientFrames(f"need at least 2 frames, got {t_total}")
    s = (np.log(np.maximum(obs.heights, LOG_FLOOR))
         + np.log(np.maximum(obs.depths, LOG_FLOOR)))
    n_ref = min(BASELINE_FRAMES, t_total)
    baseline = float(np.median(s[:n_ref]))
    residuals = np.abs(s[1:] - baseline)
    rmse = float(np.sqrt(np.mean(residuals ** 2)))
    return ScaleResidualSeries(residuals=residuals, baseline=baseline, rmse=rmse)
