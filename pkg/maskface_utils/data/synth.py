"""Deterministic synthetic face dataset for desk-scale runs."""

import math
import sys
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from PIL import Image, ImageDraw

from maskface_utils.data.align import TEMPLATE_112, compose, transform_points, warp_to_template
from maskface_utils.data.imageio import write_image
from maskface_utils.data.manifest import (
    ManifestRecord,
    PairRecord,
    write_manifest,
    write_pairs,
)
from maskface_utils.data.mask import MaskTemplate, apply_mask_overlay
from maskface_utils.exceptions import ParameterError

PathLike = Union[str, Path]

CANVAS_SIZE = 128
# identities are drawn on a larger canvas so nuisance warps never sample outside it
RENDER_SIZE = 192
RENDER_OFFSET = (RENDER_SIZE - 112) // 2

PALETTE = np.array(
    [
        [230, 57, 70], [29, 53, 87], [69, 123, 157], [241, 196, 15], [46, 204, 113],
        [155, 89, 182], [52, 73, 94], [230, 126, 34], [26, 188, 156], [236, 240, 241],
    ],
    dtype=np.uint8,
)


@dataclass
class SynthConfig:
    num_identities: int = 16
    images_per_identity: int = 20
    masked_fraction: float = 0.3
    holdout_per_identity: int = 4
    seed: int = 0
    max_rotation_deg: float = 8.0
    scale_range: Tuple[float, float] = (0.92, 1.08)
    max_translation: float = 5.0

    def __post_init__(self):
        if self.num_identities < 1 or self.images_per_identity < 1:
            raise ParameterError("need at least one identity and one image per identity")
        if not 0 <= self.masked_fraction <= 1:
            raise ParameterError(f"masked_fraction must be in [0, 1], got {self.masked_fraction}")
        if self.holdout_per_identity < 0:
            raise ParameterError("holdout_per_identity must be non-negative")


@dataclass
class SynthSummary:
    train: List[ManifestRecord]
    holdout: List[ManifestRecord]
    pairs: List[PairRecord]


def render_identity(identity: int, seed: int) -> np.ndarray:
    """
    Draw the canonical face of one identity on a RENDER_SIZE canvas.

    Landmarks of the drawing sit at TEMPLATE_112 + RENDER_OFFSET. The identity is carried by
    the background, skin tone, a coloured code on the forehead and the eye colours, so it
    survives a lower-face mask.
    """
    rng = np.random.default_rng([seed, identity])
    o = RENDER_OFFSET
    background = tuple(int(v) for v in rng.integers(40, 216, size=3))
    skin = tuple(int(v) for v in rng.integers(120, 236, size=3))
    canvas = Image.new("RGB", (RENDER_SIZE, RENDER_SIZE), background)
    draw = ImageDraw.Draw(canvas)
    draw.ellipse((o + 16, o + 6, o + 96, o + 120), fill=skin)

    code = rng.integers(len(PALETTE), size=(2, 4))
    for r in range(2):
        for c in range(4):
            x0, y0 = o + 28 + 14 * c, o + 18 + 11 * r
            draw.rectangle((x0, y0, x0 + 11, y0 + 8), fill=tuple(int(v) for v in PALETTE[code[r, c]]))

    eye_color = tuple(int(v) for v in PALETTE[rng.integers(len(PALETTE))])
    for x, y in TEMPLATE_112[:2]:
        draw.ellipse((o + x - 6, o + y - 4, o + x + 6, o + y + 4), fill=(250, 250, 250))
        draw.ellipse((o + x - 3, o + y - 3, o + x + 3, o + y + 3), fill=eye_color)

    nx, ny = TEMPLATE_112[2]
    draw.polygon([(o + nx, o + ny - 10), (o + nx - 5, o + ny + 2), (o + nx + 5, o + ny + 2)],
                 fill=tuple(max(v - 40, 0) for v in skin))
    (lx, ly), (rx, ry) = TEMPLATE_112[3], TEMPLATE_112[4]
    draw.line([(o + lx, o + ly), (o + (lx + rx) / 2, o + ly + 4), (o + rx, o + ry)],
              fill=(120, 30, 40), width=3)
    return np.asarray(canvas, dtype=np.uint8).copy()


def nuisance_transform(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray:
    """Random similarity from render-canvas coordinates to CANVAS_SIZE coordinates."""
    angle = math.radians(rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg))
    scale = rng.uniform(*cfg.scale_range)
    tx, ty = rng.uniform(-cfg.max_translation, cfg.max_translation, size=2)
    face_center = RENDER_OFFSET + 56.0
    canvas_center = CANVAS_SIZE / 2.0
    to_origin = np.array([[1.0, 0.0, -face_center], [0.0, 1.0, -face_center]])
    cos, sin = scale * math.cos(angle), scale * math.sin(angle)
    rotate = np.array([[cos, -sin, canvas_center + tx], [sin, cos, canvas_center + ty]])
    return compose(rotate, to_origin)


def render_sample(
    face: np.ndarray,
    rng: np.random.Generator,
    cfg: SynthConfig,
    masked: bool,
) -> Tuple[np.ndarray, np.ndarray]:
    """One photo of a rendered identity: nuisance pose, lighting, noise and optional mask."""
    T = nuisance_transform(rng, cfg)
    image = warp_to_template(face, T, CANVAS_SIZE)
    landmarks = transform_points(T, TEMPLATE_112 + RENDER_OFFSET)
    brightness = rng.integers(-15, 16)
    noise = rng.normal(0.0, 3.0, size=image.shape)
    image = np.clip(np.rint(image.astype(np.float64) + brightness + noise), 0, 255).astype(np.uint8)
    if masked:
        template = MaskTemplate(jitter=2.0, color_jitter=25)
        image = apply_mask_overlay(image, landmarks, template, rng).image
    return image, landmarks


def _masked_slots(rng: np.random.Generator, count: int, fraction: float) -> set:
    k = int(round(fraction * count))
    return {int(i) for i in rng.permutation(count)[:k]}


def generate_dataset(out_dir: PathLike, cfg: SynthConfig) -> SynthSummary:
    """
    Write images plus train.csv, holdout.csv and pairs.csv into ``out_dir``.

    Output is a pure function of the config: the same seed yields byte-identical files.
    """
    out_dir = Path(out_dir)
    image_dir = out_dir / "images"
    image_dir.mkdir(parents=True, exist_ok=True)

    train: List[ManifestRecord] = []
    holdout: List[ManifestRecord] = []
    for identity in range(cfg.num_identities):
        print(f"Rendering identity {identity + 1}/{cfg.num_identities}...", file=sys.stderr)
        face = render_identity(identity, cfg.seed)
        split_rng = np.random.default_rng([cfg.seed, identity, 0])
        masked_train = _masked_slots(split_rng, cfg.images_per_identity, cfg.masked_fraction)
        masked_holdout = _masked_slots(split_rng, cfg.holdout_per_identity, 0.5)

        for split, count, masked_set, records in (
            ("train", cfg.images_per_identity, masked_train, train),
            ("holdout", cfg.holdout_per_identity, masked_holdout, holdout),
        ):
            for index in range(count):
                stream = 1 if split == "train" else 2
                rng = np.random.default_rng([cfg.seed, identity, stream, index])
                masked = index in masked_set
                image, landmarks = render_sample(face, rng, cfg, masked)
                name = f"{split}_{identity:03d}_{index:03d}.ppm"
                write_image(image_dir / name, image)
                records.append(ManifestRecord(
                    image_path=f"images/{name}",
                    identity=identity,
                    masked=masked,
                    landmarks=tuple((round(float(x), 4), round(float(y), 4)) for x, y in landmarks),
                ))

    pairs = [
        PairRecord(
            path_a=a.image_path,
            path_b=b.image_path,
            same_identity=a.identity == b.identity,
            masked_pair=a.masked or b.masked,
        )
        for a, b in combinations(holdout, 2)
    ]
    write_manifest(out_dir / "train.csv", train)
    write_manifest(out_dir / "holdout.csv", holdout)
    write_pairs(out_dir / "pairs.csv", pairs)
    return SynthSummary(train=train, holdout=holdout, pairs=pairs)
