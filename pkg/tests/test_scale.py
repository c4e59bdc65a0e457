import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdibench.errors import InsufficientFrames
from pdibench.observation import ObjectObservationSeries
from pdibench.scale import compute_scale_residuals


def _obs(heights, depths):
    heights = np.asarray(heights, dtype=float)
    depths = np.asarray(depths, dtype=float)
    t = len(heights)
    return ObjectObservationSeries(
        heights=heights, depths=depths, centroids=np.zeros((t, 3)),
        pixel_centroids=np.zeros((t, 2)), valid=np.ones(t, bool),
        inherited=np.zeros(t, bool))


class TestScaleResiduals:
    def test_constant_product_is_zero(self):
        z = np.linspace(5, 10, 12)
        h = 1000.0 / z
        res = compute_scale_residuals(_obs(h, z))
        assert np.allclose(res.residuals, 0.0, atol=1e-12)
        assert res.rmse == pytest.approx(0.0, abs=1e-12)

    def test_single_doubling_costs_log_two(self):
        h = np.ones(8)
        z = np.ones(8)
        h[6] = 2.0  # product 2.0 against baseline product 1.0
        res = compute_scale_residuals(_obs(h, z))
        assert res.residuals[5] == pytest.approx(math.log(2.0), abs=1e-9)

    def test_halving_costs_the_same(self):
        h = np.ones(8)
        z = np.ones(8)
        h[6] = 0.5
        res = compute_scale_residuals(_obs(h, z))
        assert res.residuals[5] == pytest.approx(math.log(2.0), abs=1e-9)

    def test_frame_zero_excluded_from_rmse(self):
        h = np.ones(6)
        z = np.ones(6)
        h[0] = 40.0  # only frame 0 deviates; it shifts the baseline median not the set
        res = compute_scale_residuals(_obs(h, z))
        assert len(res.residuals) == 5

    def test_baseline_is_median_of_first_five(self):
        h = np.array([1.0, 1.0, 3.0, 1.0, 1.0, 1.0, 1.0])
        z = np.ones(7)
        res = compute_scale_residuals(_obs(h, z))
        assert res.baseline == pytest.approx(0.0)  # median of {0,0,ln3,0,0}

    def test_short_video_uses_all_frames_for_baseline(self):
        h = np.array([1.0, 2.0, 4.0])
        z = np.ones(3)
        res = compute_scale_residuals(_obs(h, z))
        assert res.baseline == pytest.approx(math.log(2.0))

    def test_too_few_frames(self):
        with pytest.raises(InsufficientFrames):
            compute_scale_residuals(_obs([1.0], [1.0]))

    def test_requires_3d(self):
        t = 4
        obs2d = ObjectObservationSeries(
            heights=np.ones(t), depths=None, centroids=None,
            pixel_centroids=np.zeros((t, 2)), valid=np.ones(t, bool),
            inherited=np.zeros(t, bool))
        with pytest.raises(InsufficientFrames):
            compute_scale_residuals(obs2d)


class TestScaleProperties:
    @given(c=st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=60)
    def test_global_depth_rescale_invariance(self, c):
        rng = np.random.default_rng(11)
        z = rng.uniform(2, 12, size=10)
        h = rng.uniform(20, 200, size=10)
        base = compute_scale_residuals(_obs(h, z))
        scaled = compute_scale_residuals(_obs(h, z * c))
        assert np.allclose(base.residuals, scaled.residuals, atol=1e-9)

    def test_monotone_in_log_violation_factor(self):
        values = []
        for k in (1.1, 1.5, 2.0, 4.0):
            h = np.ones(10)
            h[7] = k
            values.append(compute_scale_residuals(_obs(h, np.ones(10))).rmse)
        assert values == sorted(values)
        assert values[0] < values[-1]

    @given(k=st.floats(min_value=1.01, max_value=50))
    @settings(max_examples=60)
    def test_symmetry_factor_vs_inverse(self, k):
        h1 = np.ones(9)
        h1[6] = k
        h2 = np.ones(9)
        h2[6] = 1.0 / k
        r1 = compute_scale_residuals(_obs(h1, np.ones(9))).rmse
        r2 = compute_scale_residuals(_obs(h2, np.ones(9))).rmse
        assert r1 == pytest.approx(r2, rel=1e-9)
