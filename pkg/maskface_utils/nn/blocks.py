"""Building blocks of the face backbone: stem units, DropBlock, SE gating and residual blocks."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from maskface_utils.exceptions import ConfigurationError, DimensionError, ParameterError, StateError
from maskface_utils.nn.base import Module
from maskface_utils.nn.layers import BatchNorm, Conv2d, Linear, PReLU
from maskface_utils.tensor import ops
from maskface_utils.tensor.engine import Tensor


class ConvBNPReLU(Module):
    """Conv -> BN -> PReLU branch."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int,
        padding: int = 0,
        bias: bool = True,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        self.conv = Conv2d(in_channels, out_channels, kernel_size, stride, padding, bias, rng)
        self.bn = BatchNorm(out_channels)
        self.prelu = PReLU(out_channels)

    def forward(self, x: Tensor) -> Tensor:
        return self.prelu(self.bn(self.conv(x)))


class StemUnit(Module):
    """
    Two-branch stem reducing each spatial side by 4.

    Branch C1 average-pools 2x2 then applies a 2x2 stride-2 conv. Branch C2 folds the image
    with space-to-depth then applies a 3x3 stride-2 conv with padding 1. Each branch has its own
    BN and PReLU; the outputs are summed.
    """

    def __init__(self, in_channels: int = 3, out_channels: int = 64,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.out_channels = out_channels
        self.c1 = ConvBNPReLU(in_channels, out_channels, kernel_size=2, stride=2, rng=rng)
        self.c2 = ConvBNPReLU(4 * in_channels, out_channels, kernel_size=3, stride=2, padding=1, rng=rng)

    def branch_c1(self, x: Tensor) -> Tensor:
        return self.c1(ops.avg_pool2d(x, 2, 2))

    def branch_c2(self, x: Tensor) -> Tensor:
        return self.c2(ops.space_to_depth(x))

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[2] % 4 or x.shape[3] % 4:
            raise DimensionError(f"stem unit needs height and width divisible by 4, got {x.shape}")
        return ops.add(self.branch_c1(x), self.branch_c2(x))


class PlainStem(Module):
    """Single-branch baseline stem: 3x3 stride-2 conv + BN + PReLU, then 2x2 average pooling."""

    def __init__(self, in_channels: int = 3, out_channels: int = 64,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.out_channels = out_channels
        self.unit = ConvBNPReLU(in_channels, out_channels, kernel_size=3, stride=2, padding=1, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[2] % 4 or x.shape[3] % 4:
            raise DimensionError(f"stem needs height and width divisible by 4, got {x.shape}")
        return ops.avg_pool2d(self.unit(x), 2, 2)


@dataclass
class DropBlockConfig:
    """DropBlock settings; drop_prob is the target fraction of dropped units."""

    drop_prob: float = 0.1
    block_size: int = 3

    def __post_init__(self):
        if not 0 <= self.drop_prob < 1:
            raise ParameterError(f"drop_prob must be in [0, 1), got {self.drop_prob}")
        if self.block_size < 1 or self.block_size % 2 == 0:
            raise ParameterError(f"block_size must be an odd positive int, got {self.block_size}")


def dropblock_gamma(cfg: DropBlockConfig, h: int, w: int) -> float:
    """Bernoulli rate for block seeds so that about drop_prob of the units end up dropped."""
    bs = cfg.block_size
    return (cfg.drop_prob / (bs * bs)) * (h * w) / ((h - bs + 1) * (w - bs + 1))


def dropblock_mask(shape, cfg: DropBlockConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Sample a keep-mask of 0/1 values for a [b,c,h,w] feature map.

    Seeds are drawn only where a full block fits, and each seed zeroes the
    block_size x block_size square it anchors.
    """
    b, c, h, w = shape
    bs = cfg.block_size
    vh, vw = h - bs + 1, w - bs + 1
    seeds = rng.random((b, c, vh, vw)) < dropblock_gamma(cfg, h, w)
    dropped = np.zeros(shape, dtype=bool)
    for di in range(bs):
        for dj in range(bs):
            dropped[:, :, di:di + vh, dj:dj + vw] |= seeds
    return ~dropped


def dropblock_forward(
    x: Tensor,
    cfg: DropBlockConfig,
    training: bool,
    rng: Optional[np.random.Generator],
) -> Tensor:
    """
    Zero contiguous square regions of a feature map and rescale the survivors.

    Returns x itself in eval mode or when drop_prob is 0.

    Raises:
        ParameterError: Invalid drop_prob or block size
        DimensionError: block_size larger than the feature map
        StateError: Training mode without a generator
    """
    if cfg.drop_prob >= 1 or cfg.drop_prob < 0:
        raise ParameterError(f"drop_prob must be in [0, 1), got {cfg.drop_prob}")
    if not training or cfg.drop_prob == 0:
        return x
    if x.ndim != 4:
        raise DimensionError(f"dropblock expects [b,c,h,w], got shape {x.shape}")
    if cfg.block_size > min(x.shape[2], x.shape[3]):
        raise DimensionError(
            f"block_size {cfg.block_size} exceeds feature map {x.shape[2]}x{x.shape[3]}"
        )
    if rng is None:
        raise StateError("dropblock in training mode needs a random generator")
    keep = dropblock_mask(x.shape, cfg, rng)
    kept = int(keep.sum())
    scale = keep.size / max(kept, 1)
    return ops.mul(x, Tensor(keep * scale, dtype=x.dtype))


class SEBlock(Module):
    """Squeeze-and-excitation channel gate: x * sigmoid(fc2(relu(fc1(gap(x)))))."""

    def __init__(self, channels: int, reduction: int = 16,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        if reduction < 1 or channels % reduction:
            raise ParameterError(
                f"SE reduction {reduction} must divide the channel count {channels}"
            )
        self.fc1 = Linear(channels, channels // reduction, rng=rng)
        self.fc2 = Linear(channels // reduction, channels, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        b, c = x.shape[:2]
        scale = ops.sigmoid(self.fc2(ops.relu(self.fc1(ops.global_avg_pool2d(x)))))
        return ops.mul(x, ops.reshape(scale, (b, c, 1, 1)))


class Downsample(Module):
    """1x1 projection shortcut with BN."""

    def __init__(self, in_channels: int, out_channels: int, stride: int,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.conv = Conv2d(in_channels, out_channels, 1, stride=stride, bias=False, rng=rng)
        self.bn = BatchNorm(out_channels)

    def forward(self, x: Tensor) -> Tensor:
        return self.bn(self.conv(x))


class ResidualBlock(Module):
    """
    Basic two-conv residual block.

    y = PReLU(SE(BN(conv(PReLU(BN(conv(x)))))) + shortcut(x)), followed by DropBlock in
    training mode when the block belongs to a DropBlock stage.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        stride: int = 1,
        se_reduction: Optional[int] = None,
        dropblock: Optional[DropBlockConfig] = None,
        use_projection: bool = True,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        if stride not in (1, 2):
            raise ConfigurationError(f"residual block stride must be 1 or 2, got {stride}")
        needs_projection = stride != 1 or in_channels != out_channels
        if needs_projection and not use_projection:
            raise ConfigurationError(
                f"block {in_channels}->{out_channels} stride {stride} changes shape but has no projection"
            )
        self.conv1 = Conv2d(in_channels, out_channels, 3, stride=stride, padding=1, bias=False, rng=rng)
        self.bn1 = BatchNorm(out_channels)
        self.prelu1 = PReLU(out_channels)
        self.conv2 = Conv2d(out_channels, out_channels, 3, stride=1, padding=1, bias=False, rng=rng)
        self.bn2 = BatchNorm(out_channels)
        self.se = SEBlock(out_channels, se_reduction, rng=rng) if se_reduction else None
        self.downsample = Downsample(in_channels, out_channels, stride, rng=rng) if needs_projection else None
        self.prelu_out = PReLU(out_channels)
        self.dropblock = dropblock
        self.dropblock_rng: Optional[np.random.Generator] = None

    def forward(self, x: Tensor) -> Tensor:
        out = self.bn2(self.conv2(self.prelu1(self.bn1(self.conv1(x)))))
        if self.se is not None:
            out = self.se(out)
        shortcut = self.downsample(x) if self.downsample is not None else x
        y = self.prelu_out(ops.add(out, shortcut))
        if self.dropblock is not None:
            y = dropblock_forward(y, self.dropblock, self.training, self.dropblock_rng)
        return y
