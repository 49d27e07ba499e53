import math

import numpy as np
import pytest

from Supervision.helper.exceptions import InvalidInput, NotPositiveDefinite, ShapeMismatch
from Supervision.helper.heatmap import (
    HeatmapStack, channel_peaks, component_heatmap, heatmap_stack, mahalanobis_sq, pgssl_loss
)
from Supervision.helper.mixture import GaussianComponent, GaussianMixture


def brute_force_heatmap(mean, cov, height, width):
    (a, b), (_, c) = cov
    det = a * c - b * b
    ia, ib, ic = c / det, -b / det, a / det
    d2 = np.empty((height, width))
    for r in range(height):
        for col in range(width):
            dx, dy = float(col) - mean[0], float(r) - mean[1]
            d2[r, col] = max(ia * dx * dx + 2.0 * ib * dx * dy + ic * dy * dy, 0.0)
    values = np.exp(-0.5 * d2)
    values[d2 > 9.0] = 0.0
    return values, d2


def random_component(rng, size=16):
    A = rng.normal(0.0, 2.0, size=(2, 2))
    cov = A @ A.T
    cov = 0.5 * (cov + cov.T) + 0.5 * np.eye(2)
    return GaussianComponent.from_arrays(rng.uniform(0.05, 1.0), rng.uniform(0, size, size=2), cov)


class TestComponentHeatmap:
    def test_peak_at_integer_mean(self):
        values = component_heatmap(GaussianComponent(1.0, (5.0, 7.0), ((1.0, 0.0), (0.0, 1.0))), 16, 16)
        assert values[7, 5] == 1.0
        assert values.max() == 1.0

    def test_three_sigma_boundary_is_included(self):
        values = component_heatmap(GaussianComponent(1.0, (8.0, 8.0), ((4.0, 0.0), (0.0, 4.0))), 20, 20)
        assert values[8, 14] == pytest.approx(math.exp(-4.5), abs=1e-12)
        assert values[8, 14] == pytest.approx(0.011109, abs=1e-6)
        assert values[8, 15] == 0.0

    def test_singular_component_support(self):
        comp = GaussianComponent(1.0, (10.0, 10.0), ((2.0, 0.0), (0.0, 2.0)), singular=True)
        values = component_heatmap(comp, 20, 20)
        assert values[11, 11] == pytest.approx(0.606531, abs=1e-6)
        assert values[10, 15] == 0.0

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            component_heatmap(GaussianComponent(1.0, (0.0, 0.0), ((1.0, 2.0), (2.0, 1.0))), 8, 8)

    def test_matches_brute_force_on_random_mixtures(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            comp = random_component(rng)
            expected, d2 = brute_force_heatmap(comp.mean, comp.cov, 16, 16)
            values = component_heatmap(comp, 16, 16)
            np.testing.assert_array_equal(values, expected)
            assert np.all(d2[values > 0] <= 9.0)
            assert np.all(values[d2 > 9.0] == 0.0)


class TestMahalanobis:
    def test_isotropic(self):
        assert mahalanobis_sq(((4.0, 0.0), (0.0, 4.0)), 6.0, 0.0) == 9.0


class TestHeatmapStack:
    def test_single_component_equals_its_map(self):
        comp = GaussianComponent(1.0, (4.0, 6.0), ((3.0, 1.0), (1.0, 2.0)))
        stack = heatmap_stack(GaussianMixture((comp,)), 12, 10)
        np.testing.assert_array_equal(stack.values[0], component_heatmap(comp, 12, 10))

    def test_channels_follow_weight_order(self):
        light = GaussianComponent(0.2, (2.0, 2.0), ((1.0, 0.0), (0.0, 1.0)))
        heavy = GaussianComponent(0.8, (9.0, 9.0), ((1.0, 0.0), (0.0, 1.0)))
        stack = heatmap_stack(GaussianMixture((light, heavy)), 12, 12)
        assert channel_peaks(stack) == [(9, 9, 1.0), (2, 2, 1.0)]

    def test_stride_shrinks_the_grid(self):
        comp = GaussianComponent(1.0, (16.0, 8.0), ((16.0, 0.0), (0.0, 16.0)))
        stack = heatmap_stack(GaussianMixture((comp,)), 30, 33, stride=4)
        assert (stack.K, stack.height, stack.width) == (1, 8, 9)
        assert stack.values[0, 2, 4] == 1.0

    def test_stride_must_be_positive(self):
        comp = GaussianComponent(1.0, (4.0, 4.0), ((1.0, 0.0), (0.0, 1.0)))
        with pytest.raises(InvalidInput):
            heatmap_stack(GaussianMixture((comp,)), 8, 8, stride=0)

    def test_channel_peaks_sit_on_the_nearest_pixel(self):
        # axis-aligned covariances separate the quadratic form per axis
        rng = np.random.default_rng(11)
        for _ in range(100):
            comp = GaussianComponent(
                1.0, tuple(float(v) for v in rng.uniform(2.0, 21.0, size=2)),
                ((float(rng.uniform(0.5, 6.0)), 0.0), (0.0, float(rng.uniform(0.5, 6.0)))),
            )
            [(r, c, value)] = channel_peaks(heatmap_stack(GaussianMixture((comp,)), 24, 24))
            assert abs(c - comp.mean[0]) <= 0.5 + 1e-9
            assert abs(r - comp.mean[1]) <= 0.5 + 1e-9
            assert value >= math.exp(-0.5) * (1.0 - 1e-9)

    def test_values_lie_in_unit_interval(self):
        rng = np.random.default_rng(5)
        mixture = GaussianMixture(tuple(random_component(rng, 32) for _ in range(4)))
        stack = heatmap_stack(mixture, 32, 32)
        assert stack.values.min() >= 0.0 and stack.values.max() <= 1.0

    def test_stack_must_be_three_dimensional(self):
        with pytest.raises(ShapeMismatch):
            HeatmapStack(np.zeros((4, 4)))


class TestPgsslLoss:
    def test_identical_stacks(self):
        stack = np.random.default_rng(0).uniform(size=(3, 8, 8))
        assert pgssl_loss(stack, stack) == 0.0

    def test_constant_offset(self):
        target = np.random.default_rng(1).uniform(size=(2, 4, 4))
        assert pgssl_loss(HeatmapStack(target), HeatmapStack(target + 0.1)) == pytest.approx(0.01, abs=1e-12)

    def test_symmetric(self):
        rng = np.random.default_rng(3)
        a, b = rng.uniform(size=(2, 3, 6, 5))
        assert pgssl_loss(a, b) == pgssl_loss(b, a)
        assert pgssl_loss(a, b) > 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            pgssl_loss(np.zeros((2, 4, 4)), np.zeros((2, 4, 5)))
