import numpy as np
import pytest
from PIL import Image

from Supervision.helper.exceptions import ChipNotFound, GeometryOutOfBounds, InvalidInput, UnsupportedRaster
from Supervision.helper.imaging import (
    Disk, ImageChip, Segment, SynthSpec, augment_chip, load_chip, normalize, save_chip, synth_airplane, synth_chip
)
from Supervision.helper.modal import AugmentConfig

from conftest import make_points

IDENTITY = AugmentConfig(copies=1, noise_sigma=0.0, max_shift=0, flip_prob=0.0, max_rotation_deg=0.0)


class TestNormalize:
    def test_constant_image_maps_to_zero(self):
        np.testing.assert_array_equal(normalize(np.full((8, 8), 128, dtype=np.uint8)), np.zeros((8, 8)))

    def test_endpoints(self):
        values = normalize(np.array([[0, 255], [255, 0]], dtype=np.uint8))
        assert set(np.unique(values)) == {0.0, 1.0}

    @pytest.mark.parametrize("seed", range(5))
    def test_idempotent(self, seed):
        once = normalize(np.random.default_rng(seed).uniform(-3.0, 40.0, size=(9, 11)))
        np.testing.assert_array_equal(normalize(once), once)


class TestLoadChip:
    def test_eight_bit_pgm(self, tmp_path):
        raw = np.zeros((8, 8), dtype=np.uint8)
        raw[::2] = 255
        Image.fromarray(raw).save(tmp_path / "chip.pgm")
        chip = load_chip(tmp_path / "chip.pgm")
        np.testing.assert_array_equal(chip.values, raw / 255.0)

    def test_sixteen_bit_png(self, tmp_path):
        raw = np.tile(np.array([100, 300, 500], dtype=np.uint16), (8, 3))[:, :8]
        Image.fromarray(raw).save(tmp_path / "chip.png")
        chip = load_chip(tmp_path / "chip.png")
        assert set(np.unique(chip.values)) == {0.0, 0.5, 1.0}

    def test_sixteen_bit_pgm(self, tmp_path):
        raw = np.tile(np.array([100, 300, 500], dtype=">u2"), (8, 3))[:, :8]
        (tmp_path / "chip.pgm").write_bytes(b"P5\n8 8\n65535\n" + raw.tobytes())
        chip = load_chip(tmp_path / "chip.pgm")
        np.testing.assert_array_equal(chip.values, (raw.astype(float) - 100.0) / 400.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ChipNotFound):
            load_chip(tmp_path / "absent.pgm")

    def test_colour_image_is_rejected(self, tmp_path):
        Image.new("RGB", (8, 8)).save(tmp_path / "rgb.png")
        with pytest.raises(UnsupportedRaster):
            load_chip(tmp_path / "rgb.png")

    def test_garbage_is_rejected(self, tmp_path):
        (tmp_path / "noise.png").write_bytes(b"definitely not an image")
        with pytest.raises(UnsupportedRaster):
            load_chip(tmp_path / "noise.png")

    def test_save_then_load_binary_chip(self, tmp_path):
        values = np.zeros((16, 12))
        values[4:9, 3:7] = 1.0
        save_chip(tmp_path / "chip.pgm", ImageChip(values))
        np.testing.assert_array_equal(load_chip(tmp_path / "chip.pgm").values, values)


class TestImageChip:
    @pytest.mark.parametrize("values", [np.zeros((4, 16)), np.zeros((8, 8, 3)), np.full((8, 8), 1.5)])
    def test_rejects_invalid_values(self, values):
        with pytest.raises(InvalidInput):
            ImageChip(values)

    def test_values_are_read_only(self):
        chip = ImageChip(np.zeros((8, 8)))
        with pytest.raises(ValueError):
            chip.values[0, 0] = 1.0


class TestSynthChip:
    def test_single_disk(self):
        chip, truth = synth_chip(SynthSpec(engines=(Disk(50, 50, 3, 1.0),)))
        assert chip.values.max() == 1.0
        assert chip.values[50, 50] == 1.0
        assert (50, 50) in {(p.x, p.y) for p in truth.points}

    def test_same_seed_is_bit_identical(self):
        spec = SynthSpec(engines=(Disk(50, 50, 3, 1.0),), clutter_sigma=0.05, seed=7)
        np.testing.assert_array_equal(synth_chip(spec)[0].values, synth_chip(spec)[0].values)

    def test_seed_changes_clutter(self):
        a = synth_chip(SynthSpec(engines=(Disk(50, 50, 3, 1.0),), clutter_sigma=0.05, seed=7))[0]
        b = synth_chip(SynthSpec(engines=(Disk(50, 50, 3, 1.0),), clutter_sigma=0.05, seed=8))[0]
        assert not np.array_equal(a.values, b.values)

    def test_thick_segment_truth_has_four_corners(self):
        spec = SynthSpec(height=64, width=64, fuselage=Segment(32, 10, 32, 50, 0.6, width=4.0))
        _, truth = synth_chip(spec)
        assert len(truth) == 4

    def test_geometry_outside_chip(self):
        with pytest.raises(GeometryOutOfBounds):
            synth_chip(SynthSpec(height=32, width=32, engines=(Disk(30, 30, 4, 1.0),)))

    @pytest.mark.parametrize("seed", range(5))
    def test_random_airplanes_render(self, seed):
        chip, truth = synth_chip(synth_airplane(seed))
        assert (chip.height, chip.width) == (256, 192)
        assert len(truth) > 0
        assert all(0 <= p.x < chip.width and 0 <= p.y < chip.height for p in truth.points)


class TestAugment:
    def test_identity_settings_leave_chip_unchanged(self):
        chip, truth = synth_chip(synth_airplane(3, clutter_sigma=0.0))
        out, points = augment_chip(chip, truth, IDENTITY, seed=11)
        np.testing.assert_array_equal(out.values, chip.values)
        assert points == truth

    def test_double_flip(self):
        values = np.zeros((16, 12))
        values[2, 3] = 1.0
        cfg = IDENTITY.model_copy(update={"flip_prob": 1.0})
        out, points = augment_chip(ImageChip(values), make_points((3, 2, 1.0)), cfg, seed=0)
        np.testing.assert_array_equal(out.values, values[::-1, ::-1])
        assert [(p.x, p.y) for p in points.points] == [(8, 13)]

    def test_points_stay_inside_chip(self):
        chip, truth = synth_chip(synth_airplane(5))
        cfg = AugmentConfig(copies=1, max_shift=40, max_rotation_deg=90.0)
        for seed in range(5):
            out, points = augment_chip(chip, truth, cfg, seed)
            assert all(0 <= p.x < out.width and 0 <= p.y < out.height for p in points.points)
