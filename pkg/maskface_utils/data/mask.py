"""Synthetic 2D face-mask overlay anchored on five-point landmarks."""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from maskface_utils.data.align import ALIGNED_SIZE, TEMPLATE_112, estimate_similarity, transform_points
from maskface_utils.exceptions import ConfigurationError, DimensionError, GeometryError, ParameterError

# Lower-face polygon in the 112x112 template frame. Its top edge (y=66) sits between the
# eyes (y~51.6) and the nose tip (y~71.7).
DEFAULT_POLYGON: Tuple[Tuple[float, float], ...] = (
    (20.0, 66.0),
    (92.0, 66.0),
    (96.0, 90.0),
    (80.0, 108.0),
    (56.0, 112.0),
    (32.0, 108.0),
    (16.0, 90.0),
)

DEFAULT_FILL = (172, 201, 226)

LANDMARK_NAMES = {0: "left eye", 1: "right eye", 2: "nose tip", 3: "left mouth corner", 4: "right mouth corner"}
COVERED_LANDMARKS = {2, 3, 4}


@dataclass
class MaskTemplate:
    """
    Mask polygon in template coordinates with its fill colour and opacity.

    ``jitter`` moves every vertex by up to that many template pixels and ``color_jitter``
    shifts each fill channel; both need a generator when applied.
    """

    polygon: Tuple[Tuple[float, float], ...] = DEFAULT_POLYGON
    fill: Tuple[int, int, int] = DEFAULT_FILL
    opacity: float = 1.0
    jitter: float = 0.0
    color_jitter: int = 0

    def __post_init__(self):
        if len(self.polygon) < 3:
            raise ParameterError("mask polygon needs at least three vertices")
        if not 0 <= self.opacity <= 1:
            raise ParameterError(f"mask opacity must be in [0, 1], got {self.opacity}")
        if len(self.fill) != 3 or not all(0 <= c <= 255 for c in self.fill):
            raise ParameterError(f"mask fill must be an RGB triple in [0, 255], got {self.fill}")
        if self.jitter < 0 or self.color_jitter < 0:
            raise ParameterError("mask jitter must be non-negative")
        covered = polygon_mask(ALIGNED_SIZE, ALIGNED_SIZE, self.polygon)
        for index, name in LANDMARK_NAMES.items():
            x, y = (int(round(v)) for v in TEMPLATE_112[index])
            if covered[y, x] != (index in COVERED_LANDMARKS):
                state = "cover" if index in COVERED_LANDMARKS else "leave uncovered"
                raise ConfigurationError(f"mask polygon must {state} the {name} of the face template")


@dataclass
class MaskedFace:
    image: np.ndarray
    landmarks: np.ndarray
    masked: bool = True
    polygon: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))


def polygon_mask(height: int, width: int, points: Sequence[Sequence[float]]) -> np.ndarray:
    """Boolean [h, w] raster of a polygon given in (x, y) pixel coordinates."""
    canvas = Image.new("L", (width, height), 0)
    ImageDraw.Draw(canvas).polygon([(float(x), float(y)) for x, y in points], fill=255)
    return np.asarray(canvas) > 0


def check_landmark_geometry(landmarks: np.ndarray) -> None:
    """Reject landmark sets whose eyes and nose are (nearly) collinear."""
    left_eye, right_eye, nose = landmarks[0], landmarks[1], landmarks[2]
    eye_vec = right_eye - left_eye
    nose_vec = nose - left_eye
    area2 = abs(eye_vec[0] * nose_vec[1] - eye_vec[1] * nose_vec[0])
    scale = max(float(eye_vec @ eye_vec), float(nose_vec @ nose_vec))
    if scale == 0 or area2 < 1e-3 * scale:
        raise GeometryError("eyes and nose are collinear; cannot place a mask")


def mapped_polygon(
    landmarks: np.ndarray,
    template: MaskTemplate,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Template polygon, optionally jittered, mapped into image coordinates."""
    landmarks = np.asarray(landmarks, dtype=np.float64)
    if landmarks.shape != (5, 2):
        raise DimensionError(f"expected 5 landmark points, got shape {landmarks.shape}")
    check_landmark_geometry(landmarks)
    polygon = np.asarray(template.polygon, dtype=np.float64)
    if template.jitter and rng is not None:
        polygon = polygon + rng.uniform(-template.jitter, template.jitter, size=polygon.shape)
    T = estimate_similarity(TEMPLATE_112, landmarks)
    return transform_points(T, polygon)


def apply_mask_overlay(
    image: np.ndarray,
    landmarks: np.ndarray,
    template: Optional[MaskTemplate] = None,
    rng: Optional[np.random.Generator] = None,
) -> MaskedFace:
    """
    Alpha-composite the mask polygon onto a face.

    Pixels outside the mapped polygon are untouched.

    Raises:
        GeometryError: For collinear eyes and nose
    """
    template = template or MaskTemplate()
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionError(f"expected an [h, w, 3] image, got shape {image.shape}")
    points = mapped_polygon(landmarks, template, rng)

    fill = np.asarray(template.fill, dtype=np.float64)
    if template.color_jitter and rng is not None:
        fill = np.clip(fill + rng.integers(-template.color_jitter, template.color_jitter + 1, size=3), 0, 255)

    inside = polygon_mask(image.shape[0], image.shape[1], points)
    out = image.copy()
    alpha = template.opacity
    blended = np.rint(image[inside].astype(np.float64) * (1.0 - alpha) + fill * alpha)
    out[inside] = np.clip(blended, 0, 255).astype(image.dtype)
    return MaskedFace(image=out, landmarks=np.asarray(landmarks, dtype=np.float64).copy(),
                      masked=True, polygon=points)
