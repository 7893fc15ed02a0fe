"""Per-epoch sample plans that cap the share of masked faces."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, Sequence

import numpy as np

from maskface_utils.data.manifest import ManifestRecord
from maskface_utils.exceptions import ParameterError


@dataclass
class SamplerConfig:
    """
    Masked-share cap and ordering.

    The cap applies to the planned epoch: masked / (masked + unmasked) <= mask_ratio_cap.
    """

    mask_ratio_cap: float = 0.10
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if not 0 <= self.mask_ratio_cap < 1:
            raise ParameterError(f"mask_ratio_cap must be in [0, 1), got {self.mask_ratio_cap}")
        if self.seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.seed}")


@dataclass
class EpochPlan:
    """Record indices for one epoch, in visiting order."""

    indices: List[int] = field(default_factory=list)
    masked_count: int = 0
    unmasked_count: int = 0

    @property
    def masked_fraction(self) -> float:
        return self.masked_count / len(self.indices) if self.indices else 0.0

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)


def masked_allowance(cap: float, unmasked_count: int) -> int:
    """floor(cap / (1 - cap) * unmasked_count), computed in exact decimal arithmetic."""
    c = Fraction(str(cap))
    return math.floor(c / (1 - c) * unmasked_count)


def plan_epoch(records: Sequence[ManifestRecord], cfg: SamplerConfig, epoch: int = 0) -> EpochPlan:
    """
    Build the sample order of one epoch.

    Every unmasked record appears exactly once. Masked records are subsampled without
    replacement so their share stays within the cap; the draw depends only on
    (seed, epoch).

    Raises:
        ParameterError: cap outside [0, 1) or no unmasked records
    """
    if not 0 <= cfg.mask_ratio_cap < 1:
        raise ParameterError(f"mask_ratio_cap must be in [0, 1), got {cfg.mask_ratio_cap}")
    unmasked = [i for i, r in enumerate(records) if not r.masked]
    masked = [i for i, r in enumerate(records) if r.masked]
    if not unmasked:
        raise ParameterError("plan_epoch needs at least one unmasked record")

    rng = np.random.default_rng([cfg.seed, epoch])
    take = min(len(masked), masked_allowance(cfg.mask_ratio_cap, len(unmasked)))
    chosen: List[int] = []
    if take:
        chosen = sorted(int(i) for i in rng.choice(masked, size=take, replace=False))

    indices = unmasked + chosen
    if cfg.shuffle:
        indices = [indices[i] for i in rng.permutation(len(indices))]
    return EpochPlan(indices=indices, masked_count=len(chosen), unmasked_count=len(unmasked))
