"""Cyclic cosine learning-rate schedule with linear warmup."""

import math
from dataclasses import dataclass
from typing import Optional

from maskface_utils.exceptions import ParameterError

RESTART_POLICIES = ("cyclic", "none")


@dataclass
class ScheduleConfig:
    """
    Learning-rate schedule, in epochs.

    Three phases: linear warmup from 0 to ``base_lr``; one cosine decay down to ``lr_min`` at
    ``decay_epochs``; then, with the cyclic policy, cosine cycles of ``restart_len`` epochs
    from ``restart_peak`` (default base_lr/10) down to ``lr_min`` until ``total_epochs``.
    The ``none`` policy holds ``lr_min`` after the decay.
    """

    base_lr: float = 0.1
    warmup_epochs: float = 0.1
    decay_epochs: float = 16
    total_epochs: float = 24
    lr_min: float = 1e-5
    steps_per_epoch: int = 1
    restart_policy: str = "cyclic"
    restart_peak: Optional[float] = None
    restart_len: float = 4

    def __post_init__(self):
        if self.steps_per_epoch < 1:
            raise ParameterError(f"steps_per_epoch must be positive, got {self.steps_per_epoch}")
        if not 0 <= self.warmup_epochs < self.decay_epochs <= self.total_epochs:
            raise ParameterError(
                "need 0 <= warmup_epochs < decay_epochs <= total_epochs, got "
                f"{self.warmup_epochs}, {self.decay_epochs}, {self.total_epochs}"
            )
        if not 0 < self.lr_min < self.base_lr:
            raise ParameterError(f"need 0 < lr_min < base_lr, got {self.lr_min}, {self.base_lr}")
        if self.restart_policy not in RESTART_POLICIES:
            raise ParameterError(
                f"restart_policy must be one of {RESTART_POLICIES}, got {self.restart_policy!r}"
            )
        if self.restart_len <= 0:
            raise ParameterError(f"restart_len must be positive, got {self.restart_len}")
        peak = self.peak
        if not self.lr_min < peak <= self.base_lr:
            raise ParameterError(f"restart_peak must be in (lr_min, base_lr], got {peak}")

    @property
    def peak(self) -> float:
        return self.restart_peak if self.restart_peak is not None else self.base_lr / 10

    @property
    def total_steps(self) -> int:
        return int(round(self.total_epochs * self.steps_per_epoch))


def _cosine(lr_hi: float, lr_lo: float, t: float) -> float:
    return lr_lo + 0.5 * (lr_hi - lr_lo) * (1.0 + math.cos(math.pi * t))


def lr_at(step: float, cfg: ScheduleConfig) -> float:
    """
    Learning rate at a global step.

    Raises:
        ParameterError: step < 0 or beyond total_epochs * steps_per_epoch
    """
    spe = cfg.steps_per_epoch
    warmup_end = cfg.warmup_epochs * spe
    decay_end = cfg.decay_epochs * spe
    total = cfg.total_epochs * spe
    if step < 0 or step > total:
        raise ParameterError(f"step {step} outside the schedule [0, {total}]")

    if step < warmup_end:
        return cfg.base_lr * step / warmup_end
    if step <= decay_end:
        return _cosine(cfg.base_lr, cfg.lr_min, (step - warmup_end) / (decay_end - warmup_end))
    if cfg.restart_policy == "none":
        return cfg.lr_min

    cycle = cfg.restart_len * spe
    frac = ((step - decay_end) % cycle) / cycle
    if frac == 0:
        return cfg.lr_min
    return _cosine(cfg.peak, cfg.lr_min, frac)
