import math

import numpy as np
import pytest

from usseg.fracgrad import FracParams, frac_gradient, frac_masks, gl_coefficients
from usseg.image_core import NORMALIZED, GrayImage


def make_image(data):
    data = np.asarray(data, dtype=float)
    return GrayImage(data.shape[1], data.shape[0], data, NORMALIZED)


def gamma_coefficient(v, k):
    """Closed-form c_k = Gamma(k - v) / (Gamma(-v) Gamma(k + 1))."""
    if k == 0:
        return 1.0
    return math.gamma(k - v) / (math.gamma(-v) * math.gamma(k + 1))


class TestCoefficients:
    def test_order_one_is_backward_difference(self):
        c = gl_coefficients(1.0, 6)
        assert c.tolist() == [1.0, -1.0, 0.0, 0.0, 0.0, 0.0]

    def test_order_zero_is_identity(self):
        c = gl_coefficients(0.0, 6)
        assert c.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]

    def test_half_order_values(self):
        c = gl_coefficients(0.5, 3)
        assert c[0] == 1.0
        assert c[1] == -0.5
        assert c[2] == -0.125

    def test_recurrence_matches_gamma_formula(self):
        for v in (0.1, 0.3, 0.5, 0.9):
            c = gl_coefficients(v, 11)
            for k in range(11):
                assert abs(c[k] - gamma_coefficient(v, k)) <= 1e-12

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            gl_coefficients(0.5, 0)


class TestMasks:
    def test_center_weight_is_eight(self):
        for k in frac_masks(0.5):
            assert k.weights[2, 2] == 8.0

    def test_mask_sum(self):
        for v in (0.2, 0.5, 0.8, 1.0):
            q = (v * v - v) / 2.0
            expected = 8.0 - 6.0 * v + 8.0 * q
            for k in frac_masks(v):
                assert abs(k.weights.sum() - expected) <= 1e-12

    def test_outer_ring_vanishes_at_order_one(self):
        mx, _, _, _ = frac_masks(1.0)
        outer = mx.weights.copy()
        outer[1:4, 1:4] = 0.0
        assert np.all(outer == 0.0)

    def test_y_mask_is_quarter_turn_of_x(self):
        mx, my, _, _ = frac_masks(0.4)
        assert np.array_equal(my.weights, np.rot90(mx.weights))

    def test_mask_set_closed_under_quarter_turns(self):
        masks = {k.weights.tobytes() for k in frac_masks(0.5)}
        rotated = {np.rot90(k.weights).copy().tobytes() for k in frac_masks(0.5)}
        assert masks == rotated

    def test_diagonal_mask_moves_inner_ring_only(self):
        mx, _, md1, _ = frac_masks(0.5)
        outer_x = mx.weights.copy()
        outer_x[1:4, 1:4] = 0.0
        outer_d = md1.weights.copy()
        outer_d[1:4, 1:4] = 0.0
        assert np.array_equal(outer_x, outer_d)
        assert not np.array_equal(mx.weights, md1.weights)

    def test_rejects_out_of_range_order(self):
        with pytest.raises(ValueError):
            frac_masks(0.0)
        with pytest.raises(ValueError):
            frac_masks(1.5)
        with pytest.raises(ValueError):
            FracParams(order_v=-0.5)


class TestGradient:
    def test_constant_maps_to_half(self):
        img = make_image(np.full((12, 12), 0.3))
        out = frac_gradient(img, FracParams())
        assert np.all(out.data == 0.5)

    def test_rotation_covariance(self):
        rng = np.random.default_rng(6)
        img = make_image(rng.uniform(0, 1, (16, 16)))
        rot = make_image(np.rot90(img.data).copy())
        a = frac_gradient(rot, FracParams()).data
        b = np.rot90(frac_gradient(img, FracParams()).data)
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_step_edge_produces_ridge(self):
        data = np.full((16, 16), 0.2)
        data[:, 8:] = 0.8
        out = frac_gradient(make_image(data), FracParams())
        edge_band = out.data[4:12, 7:9]
        flat = out.data[4:12, 2:5]
        assert edge_band.mean() > flat.mean()

    def test_requires_normalized(self):
        img = GrayImage(4, 4, np.full((4, 4), 9.0))
        with pytest.raises(ValueError):
            frac_gradient(img, FracParams())

    def test_output_in_unit_interval(self):
        rng = np.random.default_rng(13)
        img = make_image(rng.uniform(0, 1, (10, 10)))
        out = frac_gradient(img, FracParams(order_v=0.7))
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0
