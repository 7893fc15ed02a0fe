"""Input preparation shared by training and extraction."""

import numpy as np
from conftest import template_landmarks

from maskface_utils.core.preprocess import batch_bounds, eval_view, to_input, training_view
from maskface_utils.data.augment import AugConfig
from maskface_utils.tensor.engine import precision

QUIET = AugConfig(p_hflip=0.0, p_blur=0.0, p_gaussian_blur=0.0, p_motion_blur=0.0, p_rgb_shift=0.0,
                  p_compress=0.0, crop_padding=0)


def test_to_input_layout_and_scaling():
    image = np.zeros((2, 3, 3), dtype=np.uint8)
    image[..., 0] = 255
    image[..., 2] = 128
    with precision(np.float64):
        x = to_input([image, image])
    assert x.shape == (2, 3, 2, 3)
    np.testing.assert_allclose(x.data[0, 0], (255 - 127.5) / 128)
    np.testing.assert_allclose(x.data[0, 1], -127.5 / 128)
    np.testing.assert_allclose(x.data[1, 2], 0.5 / 128)
    assert to_input([image]).dtype == np.float32


def test_batch_bounds_keep_the_short_tail():
    assert batch_bounds(10, 4) == [(0, 4), (4, 8), (8, 10)]
    assert batch_bounds(4, 4) == [(0, 4)]
    assert batch_bounds(0, 4) == []


def test_eval_view_aligns_to_template(rng):
    image = rng.integers(0, 256, size=(128, 128, 3), dtype=np.uint8)
    np.testing.assert_array_equal(eval_view(image, template_landmarks(), 112), image[8:120, 8:120])
    assert eval_view(image, template_landmarks(), 32).shape == (32, 32, 3)


def test_training_view_without_augmentation_is_the_eval_view(rng):
    image = rng.integers(0, 256, size=(128, 128, 3), dtype=np.uint8)
    view = training_view(image, template_landmarks(), QUIET, np.random.default_rng(0), 48)
    np.testing.assert_array_equal(view, eval_view(image, template_landmarks(), 48))


def test_training_view_is_reproducible_per_generator(rng):
    image = rng.integers(0, 256, size=(128, 128, 3), dtype=np.uint8)
    cfg = AugConfig(p_blur=0.5, p_rgb_shift=0.5)
    views = [training_view(image, template_landmarks(), cfg, np.random.default_rng(s), 48) for s in (1, 1, 2)]
    assert views[0].shape == (48, 48, 3)
    np.testing.assert_array_equal(views[0], views[1])
    assert not np.array_equal(views[0], views[2])
