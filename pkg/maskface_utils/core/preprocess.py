"""Turning manifest images into network inputs for training and extraction."""

from typing import Sequence, Tuple

import numpy as np

from maskface_utils.data.align import align_face
from maskface_utils.data.augment import AugConfig, apply_plan, random_crop, sample_plan
from maskface_utils.tensor.engine import Tensor, get_default_dtype

PIXEL_MEAN = 127.5
PIXEL_SCALE = 128.0


def training_view(
    image: np.ndarray,
    landmarks: np.ndarray,
    cfg: AugConfig,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """
    Augment the raw image (landmarks follow a flip), align it to the template, then pad-and-crop.

    All randomness comes from ``rng``, so one generator per sample makes the view reproducible.
    """
    plan = sample_plan(cfg, rng, image.shape, crop=False)
    image, landmarks = apply_plan(image, landmarks, plan, cfg)
    aligned, aligned_lms = align_face(image, landmarks, size=size)
    if cfg.crop_padding > 0:
        span = 2 * cfg.crop_padding + 1
        offset = (int(rng.integers(span)), int(rng.integers(span)))
        aligned, _ = random_crop(aligned, aligned_lms, offset, cfg.crop_padding, size)
    return aligned


def eval_view(image: np.ndarray, landmarks: np.ndarray, size: int) -> np.ndarray:
    aligned, _ = align_face(image, landmarks, size=size)
    return aligned


def to_input(images: Sequence[np.ndarray]) -> Tensor:
    """Stack uint8 [h,w,3] images into a normalized [b,3,h,w] tensor."""
    batch = np.stack([np.asarray(img, dtype=np.float64) for img in images])
    batch = (batch - PIXEL_MEAN) / PIXEL_SCALE
    return Tensor(np.ascontiguousarray(batch.transpose(0, 3, 1, 2)), dtype=get_default_dtype())


def batch_bounds(count: int, batch_size: int) -> Sequence[Tuple[int, int]]:
    """[start, stop) ranges covering ``count`` items; the last batch may be short."""
    return [(start, min(start + batch_size, count)) for start in range(0, count, batch_size)]
