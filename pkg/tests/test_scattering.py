import numpy as np
import pytest
from scipy import ndimage

from Supervision.helper.exceptions import InvalidInput
from Supervision.helper.imaging import ImageChip, synth_airplane, synth_chip
from Supervision.helper.modal import HarrisConfig, ScatterPoint
from Supervision.helper.scattering import (
    extract_points, harris_response, local_maxima, points_within, select_scales, suppress
)

from conftest import DISK_CENTRES, four_disk_spec, make_points


def brute_force_maxima(response):
    h, w = response.shape
    peaks = []
    for r in range(h):
        for c in range(w):
            window = response[max(r - 1, 0):r + 2, max(c - 1, 0):c + 2]
            if response[r, c] > 0 and response[r, c] == window.max():
                peaks.append((response[r, c], r, c))
    return sorted(peaks, reverse=True)


class TestHarrisResponse:
    def test_constant_chip_has_no_response(self):
        chip = ImageChip(np.full((16, 16), 0.3))
        np.testing.assert_array_equal(harris_response(chip, 1.0), np.zeros((16, 16)))

    def test_sigma_must_be_positive(self):
        with pytest.raises(InvalidInput):
            harris_response(ImageChip(np.zeros((8, 8))), 0.0)

    def test_rectangle_corners_are_strongest_maxima(self):
        values = np.zeros((64, 64))
        values[20:44, 16:48] = 1.0
        response = harris_response(ImageChip(values), 1.5)
        corners = [(20, 16), (20, 47), (43, 16), (43, 47)]
        for _, r, c in brute_force_maxima(response)[:4]:
            assert min(np.hypot(r - cr, c - cc) for cr, cc in corners) <= 2.0

    def test_local_maxima_match_brute_force_scan(self):
        chip, _ = synth_chip(four_disk_spec())
        response = harris_response(chip, 1.0)
        expected = {(r, c) for _, r, c in brute_force_maxima(response)}
        assert set(zip(*np.nonzero(local_maxima(response)))) == expected


class TestSelectScales:
    def test_picks_an_index_per_pixel(self):
        chip, _ = synth_chip(four_disk_spec())
        index = select_scales(chip.values, [1.0, 2.0])
        assert index.shape == chip.values.shape
        assert set(np.unique(index)) <= {0, 1}

    def test_matches_normalised_laplacian_argmax(self):
        values = np.zeros((32, 32))
        values[12:20, 12:20] = 1.0
        scales = [1.0, 2.0, 3.0]
        expected = np.argmax([np.abs(s * s * ndimage.gaussian_laplace(values, s, mode="nearest")) for s in scales], axis=0)
        np.testing.assert_array_equal(select_scales(values, scales), expected)


class TestSuppress:
    def test_only_stronger_of_close_pair_survives(self):
        a = ScatterPoint(x=10, y=10, response=2.0)
        b = ScatterPoint(x=12, y=10, response=1.0)
        assert suppress([b, a], radius=4.0, limit=10) == [a]

    def test_limit_caps_the_result(self):
        candidates = [ScatterPoint(x=10 * i, y=0, response=float(i + 1)) for i in range(5)]
        kept = suppress(candidates, radius=1.0, limit=2)
        assert [p.response for p in kept] == [5.0, 4.0]

    def test_distance_equal_to_radius_is_suppressed(self):
        a = ScatterPoint(x=0, y=0, response=2.0)
        b = ScatterPoint(x=3, y=0, response=1.0)
        assert suppress([a, b], radius=3.0, limit=10) == [a]


class TestExtractPoints:
    def test_constant_chip_gives_empty_set(self):
        assert len(extract_points(ImageChip(np.full((32, 32), 0.5)))) == 0

    def test_output_is_strength_ordered(self, four_disk_chip):
        points = extract_points(four_disk_chip, HarrisConfig(max_points=8))
        responses = [p.response for p in points.points]
        assert responses == sorted(responses, reverse=True)

    @pytest.mark.parametrize("shift", range(50))
    def test_four_disks_give_four_points(self, shift):
        # 50 layouts of four disjoint radius-2 disks
        dx, dy = shift % 10, shift // 10
        centres = [(cx + dx, cy + dy) for cx, cy in DISK_CENTRES]
        chip, _ = synth_chip(four_disk_spec(centres, size=72))
        points = extract_points(chip, HarrisConfig(max_points=8))
        assert len(points) == 4
        for p in points.points:
            assert min(np.hypot(p.x - cx, p.y - cy) for cx, cy in centres) <= 2.0

    @pytest.mark.parametrize("seed", range(3))
    def test_doubling_contrast_keeps_locations(self, seed):
        chip, _ = synth_chip(synth_airplane(seed, height=96, width=80))
        dim = extract_points(ImageChip(chip.values * 0.5))
        bright = extract_points(chip)
        assert [(p.x, p.y, p.scale) for p in dim.points] == [(p.x, p.y, p.scale) for p in bright.points]
        for a, b in zip(dim.points, bright.points):
            assert b.response == pytest.approx(16.0 * a.response, rel=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_raising_the_floor_only_removes_points(self, seed):
        chip, _ = synth_chip(synth_airplane(10 + seed, height=96, width=80))
        previous = None
        for floor in (0.01, 0.05, 0.2, 0.5, 0.9):
            found = {(p.x, p.y) for p in extract_points(chip, HarrisConfig(response_floor=floor)).points}
            if previous is not None:
                assert found <= previous
            previous = found


class TestPointsWithin:
    def test_bounds_are_inclusive(self):
        points = make_points((0, 0, 1.0), (5, 5, 2.0), (6, 5, 3.0))
        inside = points_within(points, (0, 0, 5, 5))
        assert {(p.x, p.y) for p in inside.points} == {(0, 0), (5, 5)}
