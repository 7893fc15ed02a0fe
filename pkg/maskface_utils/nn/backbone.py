"""Configurable residual backbone producing 512-d face embeddings."""

from dataclasses import dataclass, field
from typing import List, Optional, Set

import numpy as np

from maskface_utils.exceptions import ConfigurationError, DimensionError
from maskface_utils.nn.base import Module
from maskface_utils.nn.blocks import DropBlockConfig, PlainStem, ResidualBlock, StemUnit
from maskface_utils.nn.layers import BatchNorm, Linear
from maskface_utils.tensor import ops
from maskface_utils.tensor.engine import Tensor

EMBEDDING_DIM = 512

STEM_TYPES = ("dual", "plain")

PRESETS = {
    "toy": dict(
        stem_channels=16,
        widths=[16, 32, 64],
        blocks=[1, 1, 1],
        strides=[1, 2, 2],
        se_enabled=True,
        se_reduction=4,
        dropblock_stages={2, 3},
    ),
    "resnet34": dict(
        stem_channels=64,
        widths=[64, 128, 256, 512],
        blocks=[3, 4, 6, 3],
        strides=[1, 2, 2, 2],
        se_enabled=True,
        se_reduction=16,
        dropblock_stages={3, 4},
    ),
}


@dataclass
class BackboneConfig:
    """
    Backbone architecture.

    Stages are numbered from 1. DropBlock may only be placed in the last two stages, and the
    embedding width is fixed at 512.
    """

    stem: str = "dual"
    stem_channels: int = 16
    widths: List[int] = field(default_factory=lambda: [16, 32, 64])
    blocks: List[int] = field(default_factory=lambda: [1, 1, 1])
    strides: List[int] = field(default_factory=lambda: [1, 2, 2])
    se_enabled: bool = True
    se_reduction: int = 4
    dropblock_stages: Set[int] = field(default_factory=lambda: {2, 3})
    dropblock: DropBlockConfig = field(default_factory=DropBlockConfig)
    embedding_dim: int = EMBEDDING_DIM
    input_size: int = 112

    def __post_init__(self):
        self.widths = [int(v) for v in self.widths]
        self.blocks = [int(v) for v in self.blocks]
        self.strides = [int(v) for v in self.strides]
        self.dropblock_stages = {int(v) for v in self.dropblock_stages}
        if self.stem not in STEM_TYPES:
            raise ConfigurationError(f"backbone.stem must be one of {STEM_TYPES}, got {self.stem!r}")
        n = len(self.widths)
        if n == 0 or len(self.blocks) != n or len(self.strides) != n:
            raise ConfigurationError(
                "backbone.widths, backbone.blocks and backbone.strides must be non-empty and equally long"
            )
        if any(v < 1 for v in self.widths + self.blocks) or self.stem_channels < 1:
            raise ConfigurationError("backbone widths, blocks and stem_channels must be positive")
        if any(s not in (1, 2) for s in self.strides):
            raise ConfigurationError(f"backbone.strides must be 1 or 2, got {self.strides}")
        allowed = {n - 1, n} if n > 1 else {n}
        if not self.dropblock_stages <= allowed:
            raise ConfigurationError(
                f"backbone.dropblock_stages {sorted(self.dropblock_stages)} must be within the last two stages {sorted(allowed)}"
            )
        if self.embedding_dim != EMBEDDING_DIM:
            raise ConfigurationError(f"backbone.embedding_dim must be {EMBEDDING_DIM}, got {self.embedding_dim}")
        if self.input_size < 4 or self.input_size % 4:
            raise ConfigurationError(f"backbone.input_size must be a positive multiple of 4, got {self.input_size}")
        if self.se_enabled:
            bad = [w for w in self.widths if self.se_reduction < 1 or w % self.se_reduction]
            if bad:
                raise ConfigurationError(
                    f"backbone.se_reduction {self.se_reduction} does not divide stage widths {bad}"
                )

    @property
    def num_stages(self) -> int:
        return len(self.widths)

    def final_spatial_size(self) -> int:
        size = self.input_size // 4
        for stride in self.strides:
            size = ops.conv_output_size(size, 3, stride, 1)
        return size


def backbone_preset(name: str, **overrides) -> BackboneConfig:
    """Config for a named preset with optional field overrides."""
    if name not in PRESETS:
        raise ConfigurationError(f"Unknown backbone preset {name!r}; choose from {sorted(PRESETS)}")
    values = dict(PRESETS[name])
    values.update(overrides)
    return BackboneConfig(**values)


class Stage(Module):
    def __init__(self, in_channels: int, out_channels: int, num_blocks: int, stride: int,
                 se_reduction: Optional[int], dropblock: Optional[DropBlockConfig],
                 rng: np.random.Generator):
        super().__init__()
        self.num_blocks = num_blocks
        for j in range(num_blocks):
            block = ResidualBlock(
                in_channels if j == 0 else out_channels,
                out_channels,
                stride=stride if j == 0 else 1,
                se_reduction=se_reduction,
                dropblock=dropblock,
                rng=rng,
            )
            setattr(self, f"block{j}", block)

    def blocks(self) -> List[ResidualBlock]:
        return [getattr(self, f"block{j}") for j in range(self.num_blocks)]

    def forward(self, x: Tensor) -> Tensor:
        for block in self.blocks():
            x = block(x)
        return x


class Backbone(Module):
    """stem -> stages -> flatten -> FC(512) -> BN: [b,3,s,s] images to [b,512] embeddings."""

    def __init__(self, cfg: BackboneConfig, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        stem_cls = StemUnit if cfg.stem == "dual" else PlainStem
        self.stem = stem_cls(3, cfg.stem_channels, rng=rng)
        in_channels = cfg.stem_channels
        for i, (width, count, stride) in enumerate(zip(cfg.widths, cfg.blocks, cfg.strides), start=1):
            dropblock = cfg.dropblock if i in cfg.dropblock_stages else None
            se_reduction = cfg.se_reduction if cfg.se_enabled else None
            setattr(self, f"stage{i}", Stage(in_channels, width, count, stride, se_reduction, dropblock, rng))
            in_channels = width
        side = cfg.final_spatial_size()
        self.fc = Linear(in_channels * side * side, cfg.embedding_dim, rng=rng)
        self.features = BatchNorm(cfg.embedding_dim)
        self.set_dropblock_rng(np.random.default_rng([seed, 1]))

    def stages(self) -> List[Stage]:
        return [getattr(self, f"stage{i}") for i in range(1, self.cfg.num_stages + 1)]

    def set_dropblock_rng(self, rng: np.random.Generator) -> None:
        """Share one generator among all DropBlock sites."""
        for stage in self.stages():
            for block in stage.blocks():
                block.dropblock_rng = rng

    def forward(self, images: Tensor) -> Tensor:
        size = self.cfg.input_size
        if images.ndim != 4 or images.shape[1:] != (3, size, size):
            raise DimensionError(f"backbone expects [b,3,{size},{size}] images, got {images.shape}")
        x = self.stem(images)
        for stage in self.stages():
            x = stage(x)
        return self.features(self.fc(ops.flatten(x)))
