import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdibench.errors import InsufficientFrames
from pdibench.motion import (acceleration_penalty, compute_kinematics,
                             compute_traj_residuals, direction_penalty)


def _line(t_total, velocity, fps, start=(0.0, 0.0, 0.0)):
    t = np.arange(t_total)[:, None] / fps
    return np.asarray(start) + t * np.asarray(velocity)


class TestKinematics:
    def test_constant_velocity_has_zero_acceleration(self):
        kin = compute_kinematics(_line(10, (1.0, 0.0, 2.0), 24.0), 24.0)
        assert np.allclose(kin.accelerations, 0.0, atol=1e-9)

    def test_speed_is_frame_rate_normalised(self):
        # 0.5 units per frame at 24 fps -> 12 units/s
        cents = np.zeros((6, 3))
        cents[:, 0] = np.arange(6) * 0.5
        kin = compute_kinematics(cents, 24.0)
        assert np.allclose(np.linalg.norm(kin.velocities, axis=1), 12.0)

    def test_static_object_floors_v_ref(self):
        kin = compute_kinematics(np.zeros((8, 3)), 24.0)
        assert kin.v_ref == 1e-6

    def test_v_ref_uses_acceleration_floor(self):
        # oscillation: median speed small but accelerations large
        cents = np.zeros((9, 3))
        cents[::2, 0] = 0.1
        kin = compute_kinematics(cents, 10.0)
        med_v = np.median(np.linalg.norm(kin.velocities, axis=1))
        med_a = np.median(np.linalg.norm(kin.accelerations, axis=1))
        assert kin.v_ref == pytest.approx(max(med_v, 2 * med_a, 1e-6))
        assert kin.v_ref == pytest.approx(2 * med_a)

    def test_too_few_frames(self):
        with pytest.raises(InsufficientFrames):
            compute_kinematics(np.zeros((2, 3)), 24.0)


class TestAccelerationPenalty:
    def test_zero(self):
        assert acceleration_penalty(0.0, 1.0) == 0.0

    def test_reference_point(self):
        # ratio 5 -> 2 tanh(1)
        assert acceleration_penalty(5.0, 1.0) == pytest.approx(2 * math.tanh(1.0))
        assert acceleration_penalty(5.0, 1.0) == pytest.approx(1.523188, abs=1e-6)

    def test_saturation(self):
        val = acceleration_penalty(50.0, 1.0)  # ratio 50 -> 2 tanh(10)
        assert val == pytest.approx(2.0, abs=1e-8)
        assert val < 2.0

    @given(r=st.floats(min_value=0, max_value=20))
    @settings(max_examples=100)
    def test_bounded_below_two(self, r):
        assert 0.0 <= acceleration_penalty(r, 1.0) < 2.0


class TestDirectionPenalty:
    def test_parallel_is_zero(self):
        assert direction_penalty((1, 0, 0), (2, 0, 0), 1.0) == 0.0

    def test_reversal_is_two(self):
        assert direction_penalty((1, 0, 0), (-1, 0, 0), 1.0) == 2.0

    def test_right_angle_is_one(self):
        assert direction_penalty((1, 0, 0), (0, 1, 0), 1.0) == pytest.approx(1.0)

    def test_speed_gate_suppresses(self):
        # both speeds below 0.1 * v_ref: no penalty regardless of angle
        assert direction_penalty((0.05, 0, 0), (-0.05, 0, 0), 1.0) == 0.0
        assert direction_penalty((0.05, 0, 0), (-5.0, 0, 0), 1.0) == 0.0


def _brute_force_residuals(cents, fps):
    """Independent evaluation of the combined per-step residuals."""
    cents = np.asarray(cents, dtype=float)
    vel = [(cents[i + 1] - cents[i]) * fps for i in range(len(cents) - 1)]
    acc = [(vel[i + 1] - vel[i]) * fps for i in range(len(vel) - 1)]
    v_ref = max(float(np.median([np.linalg.norm(v) for v in vel])),
                2.0 * float(np.median([np.linalg.norm(a) for a in acc])), 1e-6)
    out = []
    for j in range(len(acc)):
        a_pen = 2.0 * math.tanh((np.linalg.norm(acc[j]) / v_ref) / 5.0)
        n0, n1 = np.linalg.norm(vel[j]), np.linalg.norm(vel[j + 1])
        if n0 > 0.1 * v_ref and n1 > 0.1 * v_ref:
            cos = float(np.dot(vel[j], vel[j + 1]) / (n0 * n1))
            d_pen = 1.0 - max(-1.0, min(1.0, cos))
        else:
            d_pen = 0.0
        out.append(0.5 * a_pen + 0.5 * d_pen)
    return np.array(out)


class TestTrajResiduals:
    def test_uniform_linear_motion_is_exactly_zero(self):
        kin = compute_kinematics(_line(12, (0.0, 0.0, 1.0), 32.0), 32.0)
        res = compute_traj_residuals(kin)
        assert res.rmse == 0.0

    def test_teleport_saturates_and_raises_rmse(self):
        fps = 24.0
        cents = _line(20, (0.0, 0.0, 1.0), fps)
        cents[10:, 2] += 100.0 / fps  # jump of 100 * v_ref * dt (v_ref = 1)
        kin = compute_kinematics(cents, fps)
        res = compute_traj_residuals(kin)
        assert res.accel_penalties.max() > 1.99
        baseline = compute_traj_residuals(
            compute_kinematics(_line(20, (0.0, 0.0, 1.0), fps), fps))
        assert res.rmse > baseline.rmse
        assert np.allclose(res.residuals, _brute_force_residuals(cents, fps))

    def test_right_angle_turn_matches_hand_evaluation(self):
        fps, s = 24.0, 1.0
        cents = np.zeros((9, 3))
        cents[:5, 0] = np.arange(5) * s / fps
        cents[5:, 0] = cents[4, 0]
        cents[5:, 1] = np.arange(1, 5) * s / fps
        kin = compute_kinematics(cents, fps)
        res = compute_traj_residuals(kin)
        # the turn step: phi = 1, accel magnitude = s * sqrt(2) * fps
        turn = np.argmax(res.direction_penalties)
        assert res.direction_penalties[turn] == pytest.approx(1.0)
        expected_acc = 2.0 * math.tanh((s * math.sqrt(2.0) * fps / kin.v_ref) / 5.0)
        assert res.accel_penalties[turn] == pytest.approx(expected_acc)
        assert res.residuals[turn] == pytest.approx(0.5 + 0.5 * expected_acc)
        assert np.allclose(res.residuals, _brute_force_residuals(cents, fps))

    def test_reversal_step_scores_two_in_direction_penalty(self):
        fps = 32.0
        cents = np.zeros((12, 3))
        cents[:7, 2] = np.arange(7) / fps
        cents[7:, 2] = cents[6, 2] - np.arange(1, 6) / fps
        res = compute_traj_residuals(compute_kinematics(cents, fps))
        assert res.direction_penalties.max() == 2.0

    @given(scale=st.floats(min_value=1e-2, max_value=1e3))
    @settings(max_examples=50)
    def test_world_scale_invariance(self, scale):
        rng = np.random.default_rng(7)
        cents = np.cumsum(rng.normal(size=(10, 3)), axis=0)
        base = compute_traj_residuals(compute_kinematics(cents, 24.0))
        scaled = compute_traj_residuals(compute_kinematics(cents * scale, 24.0))
        assert np.allclose(base.residuals, scaled.residuals, atol=1e-9)

    def test_global_rotation_invariance(self):
        rng = np.random.default_rng(9)
        cents = np.cumsum(rng.normal(size=(12, 3)), axis=0)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1
        base = compute_traj_residuals(compute_kinematics(cents, 24.0))
        rot = compute_traj_residuals(compute_kinematics(cents @ q.T, 24.0))
        assert np.allclose(base.residuals, rot.residuals, atol=1e-9)

    @given(seed=st.integers(min_value=0, max_value=500))
    @settings(max_examples=60)
    def test_residuals_bounded(self, seed):
        rng = np.random.default_rng(seed)
        cents = np.cumsum(rng.normal(size=(8, 3)) * rng.uniform(0.01, 10), axis=0)
        res = compute_traj_residuals(compute_kinematics(cents, 24.0))
        assert (res.residuals >= 0).all()
        assert (res.residuals < 2.0).all()
