"""3D motion-consistency residual over smoothed world-space centroids.

Velocities and accelerations are frame-rate normalised:

    v_t = (C_{t+1} - C_t) * fps        (T-1 entries)
    a_t = (v_{t+1} - v_t) * fps        (T-2 entries)

The speed reference v_ref = max(median ||v||, 2 * median ||a||, 1e-6)
keeps the acceleration ratio well-defined for near-static objects. Each
residual step pairs one acceleration with the turn angle of the two
velocities that define it:

    step j:  a~ = 2 tanh((||a_j|| / v_ref) / 5)
             phi = 1 - cos(angle(v_j, v_{j+1}))   when both speeds clear
                   the 0.1 * v_ref gate, else 0
             eps_traj(j) = 0.5 * a~ + 0.5 * phi

Because everything is computed from world-space centroids, a rigid camera
trajectory cannot change the residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientFrames

SPEED_FLOOR = 1e-6
SATURATION_SCALE = 5.0
SPEED_GATE_FRACTION = 0.1


@dataclass(frozen=True)
class KinematicsSeries:
    velocities: np.ndarray     # (T-1, 3), world units / s
    accelerations: np.ndarray  # (T-2, 3), world units / s^2
    v_ref: float


@dataclass(frozen=True)
class TrajResidualSeries:
    accel_penalties: np.ndarray      # (T-2,), in [0, 2)
    direction_penalties: np.ndarray  # (T-2,), in [0, 2]
    residuals: np.ndarray            # (T-2,)
    rmse: float


def compute_kinematics(centroids, fps):
    """Velocities, accelerations and the robust speed reference.

    ``centroids`` is the smoothed (T, 3) world trajectory. T >= 3.
    """
    c = np.asarray(centroids, dtype=np.float64)
    if c.shape[0] < 3:
        raise InsufficientFrames(f"need at least 3 frames, got {c.shape[0]}")
    vel = np.diff(c, axis=0) * fps
    acc = np.diff(vel, axis=0) * fps
    speed_med = float(np.median(np.linalg.norm(vel, axis=1)))
    accel_med = float(np.median(np.linalg.norm(acc, axis=1)))
    v_ref = max(speed_med, 2.0 * accel_med, SPEED_FLOOR)
    return KinematicsSeries(velocities=vel, accelerations=acc, v_ref=v_ref)


def acceleration_penalty(a_norm, v_ref):
    """Soft-saturated relative acceleration, in [0, 2)."""
    r = a_norm / v_ref
    return 2.0 * np.tanh(r / SATURATION_SCALE)


def direction_penalty(v_prev, v_curr, v_ref):
    """Cosine dissimilarity of consecutive velocities, speed-gated.

    Returns 0 when either speed is at or below 0.1 * v_ref, so micro
    tremor around a stall cannot trigger the penalty. In [0, 2].
    """
    n_prev = float(np.linalg.norm(v_prev))
    n_curr = float(np.linalg.norm(v_curr))
    gate = SPEED_GATE_FRACTION * v_ref
    if n_prev <= gate or n_curr <= gate:
        return 0.0
    cos = float(np.dot(v_prev, v_curr) / (n_prev * n_curr))
    cos = min(1.0, max(-1.0, cos))
    return 1.0 - cos


def compute_traj_residuals(kin):
    """Combine acceleration and direction penalties with equal weights."""
    vel, acc = kin.velocities, kin.accelerations
    n_steps = acc.shape[0]
    accel_pen = np.zeros(n_steps)
    dir_pen = np.zeros(n_steps)
    for j in range(n_steps):
        accel_pen[j] = acceleration_penalty(np.linalg.norm(acc[j]), kin.v_ref)
        dir_pen[j] = direction_penalty(vel[j], vel[j + 1], kin.v_ref)
    residuals = 0.5 * accel_pen + 0.5 * dir_pen
    rmse = float(np.sqrt(np.mean(residuals ** 2)))
    return TrajResidualSeries(accel_penalties=accel_pen, direction_penalties=dir_pen,
                              residuals=residuals, rmse=rmse)
