"""Augmentation plans and their landmark bookkeeping."""

import numpy as np
import pytest

from maskface_utils.data.align import TEMPLATE_112
from maskface_utils.data.augment import (
    AugConfig,
    AugPlan,
    apply_plan,
    augment,
    brightness_contrast,
    compress,
    hflip,
    random_crop,
    rgb_shift,
    sample_plan,
)
from maskface_utils.exceptions import DimensionError, ParameterError

ALL_ON = dict(p_hflip=1.0, p_blur=1.0, p_gaussian_blur=1.0, p_motion_blur=1.0, p_rgb_shift=1.0,
              p_compress=1.0, p_brightness_contrast=1.0, p_noise=1.0)
ALL_OFF = {k: 0.0 for k in ALL_ON}


@pytest.fixture
def face(rng):
    return rng.integers(0, 256, size=(112, 112, 3), dtype=np.uint8)


class TestSamplePlan:
    def test_everything_fires_at_probability_one(self):
        plan = sample_plan(AugConfig(**ALL_ON), np.random.default_rng(0), (112, 112, 3))
        assert all(plan.fired().values())
        assert 0.5 <= plan.gaussian_sigma <= 1.2
        assert all(-20 <= v <= 20 for v in plan.rgb_shift)
        assert all(0 <= v <= 8 for v in plan.crop_offset)

    def test_nothing_fires_at_probability_zero(self):
        plan = sample_plan(AugConfig(**ALL_OFF, crop_padding=0), np.random.default_rng(0), (112, 112, 3))
        assert not any(plan.fired().values())

    def test_same_generator_state_same_plan(self):
        cfg = AugConfig(p_blur=0.5, p_rgb_shift=0.5)
        a = [sample_plan(cfg, np.random.default_rng(s), (112, 112, 3)) for s in range(20)]
        b = [sample_plan(cfg, np.random.default_rng(s), (112, 112, 3)) for s in range(20)]
        assert a == b

    def test_firing_rates_match_probabilities(self):
        rng = np.random.default_rng(11)
        cfg = AugConfig()
        draws = 10_000
        counts = dict.fromkeys(AugPlan().fired(), 0)
        for _ in range(draws):
            for name, fired in sample_plan(cfg, rng, (112, 112, 3), crop=False).fired().items():
                counts[name] += fired
        assert abs(counts["hflip"] / draws - 0.5) < 0.02
        for name in ("blur", "gaussian_blur", "motion_blur", "rgb_shift", "compress"):
            assert abs(counts[name] / draws - 0.05) <= 0.2 * 0.05, name
        assert counts["brightness_contrast"] == counts["noise"] == counts["crop"] == 0

    def test_crop_larger_than_padded_image(self):
        with pytest.raises(DimensionError):
            sample_plan(AugConfig(crop_padding=2, crop_size=112), np.random.default_rng(0), (100, 100, 3))


class TestTransforms:
    def test_hflip_mirrors_and_swaps_sides(self, face):
        flipped, points = hflip(face, TEMPLATE_112)
        np.testing.assert_array_equal(flipped[:, 0], face[:, -1])
        assert points[0, 0] == pytest.approx(111 - TEMPLATE_112[1, 0])
        assert points[3, 0] == pytest.approx(111 - TEMPLATE_112[4, 0])
        assert points[0, 0] < points[1, 0]
        again, restored = hflip(flipped, points)
        np.testing.assert_array_equal(again, face)
        np.testing.assert_allclose(restored, TEMPLATE_112)

    def test_crop_at_padding_offset_is_identity(self, face):
        image, points = random_crop(face, TEMPLATE_112, (4, 4), padding=4, size=112)
        np.testing.assert_array_equal(image, face)
        np.testing.assert_allclose(points, TEMPLATE_112)

    def test_crop_shifts_landmarks_with_the_window(self, face):
        image, points = random_crop(face, TEMPLATE_112, (0, 8), padding=4, size=112)
        np.testing.assert_allclose(points, TEMPLATE_112 + [4.0, -4.0])
        np.testing.assert_array_equal(image[:108, 4:], face[4:, :108])
        assert not image[108:].any()
        assert not image[:, :4].any()

    def test_crop_window_outside(self, face):
        with pytest.raises(DimensionError):
            random_crop(face, TEMPLATE_112, (9, 0), padding=4, size=112)

    def test_rgb_shift_clips(self):
        image = np.array([[[250, 5, 100]]], dtype=np.uint8)
        np.testing.assert_array_equal(rgb_shift(image, (10, -10, 0)), [[[255, 0, 100]]])

    def test_compress_and_brightness_keep_shape(self, face):
        assert compress(face).shape == face.shape
        np.testing.assert_array_equal(brightness_contrast(face, 1.0, 0.0), face)


class TestApplyPlan:
    def test_empty_plan_is_identity(self, face):
        image, points = apply_plan(face, TEMPLATE_112, AugPlan(), AugConfig())
        np.testing.assert_array_equal(image, face)
        np.testing.assert_allclose(points, TEMPLATE_112)

    def test_full_plan_keeps_output_contract(self, face):
        image, points = augment(face, TEMPLATE_112, AugConfig(**ALL_ON), np.random.default_rng(3))
        assert image.shape == (112, 112, 3) and image.dtype == np.uint8
        assert points.shape == (5, 2)
        assert points[0, 0] < points[1, 0]

    def test_rejects_grey_images(self, face):
        with pytest.raises(DimensionError):
            apply_plan(face[:, :, 0], TEMPLATE_112, AugPlan(), AugConfig())


@pytest.mark.parametrize("kwargs", [{"p_hflip": 1.5}, {"p_noise": -0.1}, {"crop_padding": -1}, {"crop_size": 0}])
def test_invalid_config(kwargs):
    with pytest.raises(ParameterError):
        AugConfig(**kwargs)
