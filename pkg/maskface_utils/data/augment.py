"""Photometric and geometric training augmentations with landmark bookkeeping."""

from dataclasses import dataclass, fields
from typing import Optional, Tuple

import numpy as np
from PIL import Image, ImageFilter

from maskface_utils.exceptions import DimensionError, ParameterError

# hflip exchanges left/right eyes and left/right mouth corners
FLIP_ORDER = [1, 0, 2, 4, 3]

MOTION_KERNELS = {
    "horizontal": (0, 0, 0, 1, 1, 1, 0, 0, 0),
    "vertical": (0, 1, 0, 0, 1, 0, 0, 1, 0),
    "diagonal": (1, 0, 0, 0, 1, 0, 0, 0, 1),
    "antidiagonal": (0, 0, 1, 0, 1, 0, 1, 0, 0),
}


@dataclass
class AugConfig:
    """
    Augmentation probabilities and ranges.

    ``crop_padding`` of 0 disables the pad-then-crop step.
    """

    p_hflip: float = 0.5
    p_blur: float = 0.05
    p_gaussian_blur: float = 0.05
    p_motion_blur: float = 0.05
    p_rgb_shift: float = 0.05
    rgb_shift_limit: int = 20
    p_compress: float = 0.05
    p_brightness_contrast: float = 0.0
    p_noise: float = 0.0
    noise_sigma: float = 5.0
    crop_padding: int = 4
    crop_size: int = 112

    def __post_init__(self):
        for f in fields(self):
            if f.name.startswith("p_"):
                value = getattr(self, f.name)
                if not 0 <= value <= 1:
                    raise ParameterError(f"aug.{f.name} must be in [0, 1], got {value}")
        if self.rgb_shift_limit < 0 or self.crop_padding < 0 or self.noise_sigma < 0:
            raise ParameterError("aug ranges must be non-negative")
        if self.crop_size < 1:
            raise ParameterError(f"aug.crop_size must be positive, got {self.crop_size}")


@dataclass
class AugPlan:
    """Which augmentations fire for one sample, with their drawn parameters."""

    hflip: bool = False
    blur: bool = False
    gaussian_sigma: Optional[float] = None
    motion_kernel: Optional[str] = None
    rgb_shift: Optional[Tuple[int, int, int]] = None
    compress: bool = False
    brightness_contrast: Optional[Tuple[float, float]] = None
    noise_seed: Optional[int] = None
    crop_offset: Optional[Tuple[int, int]] = None

    def fired(self) -> dict:
        return {
            "hflip": self.hflip,
            "blur": self.blur,
            "gaussian_blur": self.gaussian_sigma is not None,
            "motion_blur": self.motion_kernel is not None,
            "rgb_shift": self.rgb_shift is not None,
            "compress": self.compress,
            "brightness_contrast": self.brightness_contrast is not None,
            "noise": self.noise_seed is not None,
            "crop": self.crop_offset is not None,
        }


def sample_plan(
    cfg: AugConfig,
    rng: np.random.Generator,
    image_shape: Tuple[int, ...],
    crop: bool = True,
) -> AugPlan:
    """
    Draw one plan. Every firing decision consumes one uniform in a fixed order, so a plan
    depends only on the generator state.
    """
    u = rng.random(8)
    plan = AugPlan()
    plan.hflip = bool(u[0] < cfg.p_hflip)
    plan.blur = bool(u[1] < cfg.p_blur)
    if u[2] < cfg.p_gaussian_blur:
        plan.gaussian_sigma = float(rng.uniform(0.5, 1.2))
    if u[3] < cfg.p_motion_blur:
        plan.motion_kernel = sorted(MOTION_KERNELS)[int(rng.integers(len(MOTION_KERNELS)))]
    if u[4] < cfg.p_rgb_shift:
        lim = cfg.rgb_shift_limit
        plan.rgb_shift = tuple(int(v) for v in rng.integers(-lim, lim + 1, size=3))
    plan.compress = bool(u[5] < cfg.p_compress)
    if u[6] < cfg.p_brightness_contrast:
        plan.brightness_contrast = (float(rng.uniform(0.8, 1.2)), float(rng.uniform(-20, 20)))
    if u[7] < cfg.p_noise:
        plan.noise_seed = int(rng.integers(2 ** 32))
    if crop and cfg.crop_padding > 0:
        h, w = image_shape[:2]
        pad = cfg.crop_padding
        max_y = h + 2 * pad - cfg.crop_size
        max_x = w + 2 * pad - cfg.crop_size
        if max_y < 0 or max_x < 0:
            raise DimensionError(
                f"image {w}x{h} with padding {pad} is smaller than crop size {cfg.crop_size}"
            )
        plan.crop_offset = (int(rng.integers(max_x + 1)), int(rng.integers(max_y + 1)))
    return plan


def hflip(image: np.ndarray, landmarks: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mirror horizontally; x' = w - 1 - x and left/right points swap."""
    w = image.shape[1]
    flipped = np.ascontiguousarray(image[:, ::-1])
    mirrored = np.asarray(landmarks, dtype=np.float64).copy()
    mirrored[:, 0] = (w - 1) - mirrored[:, 0]
    return flipped, mirrored[FLIP_ORDER]


def _pil_filter(image: np.ndarray, kernel) -> np.ndarray:
    return np.asarray(Image.fromarray(image).filter(kernel), dtype=np.uint8).copy()


def box_blur(image: np.ndarray) -> np.ndarray:
    """3x3 mean filter."""
    return _pil_filter(image, ImageFilter.BoxBlur(1))


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    return _pil_filter(image, ImageFilter.GaussianBlur(radius=sigma))


def motion_blur(image: np.ndarray, direction: str) -> np.ndarray:
    return _pil_filter(image, ImageFilter.Kernel((3, 3), MOTION_KERNELS[direction], scale=3))


def rgb_shift(image: np.ndarray, offsets: Tuple[int, int, int]) -> np.ndarray:
    shifted = image.astype(np.int16) + np.asarray(offsets, dtype=np.int16)
    return np.clip(shifted, 0, 255).astype(np.uint8)


def compress(image: np.ndarray) -> np.ndarray:
    """Lossy proxy: 2x bilinear downscale followed by upscale back to the original size."""
    h, w = image.shape[:2]
    small = Image.fromarray(image).resize((max(w // 2, 1), max(h // 2, 1)), Image.Resampling.BILINEAR)
    return np.asarray(small.resize((w, h), Image.Resampling.BILINEAR), dtype=np.uint8).copy()


def brightness_contrast(image: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    out = alpha * (image.astype(np.float64) - 128.0) + 128.0 + beta
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def gaussian_noise(image: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=image.shape)
    return np.clip(np.rint(image + noise), 0, 255).astype(np.uint8)


def random_crop(
    image: np.ndarray,
    landmarks: np.ndarray,
    offset: Tuple[int, int],
    padding: int,
    size: int = 112,
) -> Tuple[np.ndarray, np.ndarray]:
    """Zero-pad by ``padding`` on every side, then cut a size x size window at ``offset``."""
    ox, oy = offset
    padded = np.pad(image, ((padding, padding), (padding, padding), (0, 0)))
    window = padded[oy:oy + size, ox:ox + size]
    if window.shape[:2] != (size, size):
        raise DimensionError(f"crop window at {offset} leaves the padded image")
    shifted = np.asarray(landmarks, dtype=np.float64) + np.array([padding - ox, padding - oy])
    return np.ascontiguousarray(window), shifted


def apply_plan(
    image: np.ndarray,
    landmarks: np.ndarray,
    plan: AugPlan,
    cfg: AugConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """Apply a drawn plan: flip, blurs, colour changes, compression, noise, then crop."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionError(f"expected an [h, w, 3] image, got shape {image.shape}")
    landmarks = np.asarray(landmarks, dtype=np.float64)
    if plan.hflip:
        image, landmarks = hflip(image, landmarks)
    if plan.blur:
        image = box_blur(image)
    if plan.gaussian_sigma is not None:
        image = gaussian_blur(image, plan.gaussian_sigma)
    if plan.motion_kernel is not None:
        image = motion_blur(image, plan.motion_kernel)
    if plan.rgb_shift is not None:
        image = rgb_shift(image, plan.rgb_shift)
    if plan.compress:
        image = compress(image)
    if plan.brightness_contrast is not None:
        image = brightness_contrast(image, *plan.brightness_contrast)
    if plan.noise_seed is not None:
        image = gaussian_noise(image, cfg.noise_sigma, plan.noise_seed)
    if plan.crop_offset is not None:
        image, landmarks = random_crop(image, landmarks, plan.crop_offset, cfg.crop_padding, cfg.crop_size)
    return image, landmarks


def augment(
    image: np.ndarray,
    landmarks: np.ndarray,
    cfg: AugConfig,
    rng: np.random.Generator,
    crop: bool = True,
) -> Tuple[np.ndarray, np.ndarray]:
    """Sample a plan from ``rng`` and apply it."""
    plan = sample_plan(cfg, rng, np.asarray(image).shape, crop=crop)
    return apply_plan(image, landmarks, plan, cfg)
