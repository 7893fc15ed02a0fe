"""Stochastic gradient descent with momentum and L2 weight decay."""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from maskface_utils.exceptions import ParameterError, StateError
from maskface_utils.tensor.engine import Parameter


@dataclass
class SGDConfig:
    """
    SGD hyperparameters.

    ``decay_norm_params=False`` exempts one-dimensional parameters (BN affine terms, PReLU
    slopes, biases) from weight decay.
    """

    momentum: float = 0.9
    weight_decay: float = 5e-4
    decay_norm_params: bool = True

    def __post_init__(self):
        if not 0 <= self.momentum < 1:
            raise ParameterError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ParameterError(f"weight_decay must be non-negative, got {self.weight_decay}")


def sgd_step(
    params: Sequence[np.ndarray],
    grads: Sequence[Optional[np.ndarray]],
    velocities: Sequence[np.ndarray],
    lr: float,
    cfg: SGDConfig,
    decay_mask: Optional[Sequence[bool]] = None,
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """
    One momentum step: g' = g + wd*p; v = momentum*v + g'; p = p - lr*v.

    Args:
        params: Current parameter values
        grads: Gradients, one per parameter
        velocities: Velocity buffers, one per parameter
        lr: Learning rate
        cfg: Momentum and weight decay
        decay_mask: Per-parameter flag selecting which parameters receive weight decay

    Returns:
        (new parameter values, new velocities)

    Raises:
        StateError: If a gradient is missing or a buffer shape drifted
    """
    if not (len(params) == len(grads) == len(velocities)):
        raise StateError("sgd_step needs one gradient and one velocity per parameter")
    new_params, new_velocities = [], []
    for i, (p, g, v) in enumerate(zip(params, grads, velocities)):
        if g is None:
            raise StateError(f"parameter {i} has no gradient")
        if g.shape != p.shape or v.shape != p.shape:
            raise StateError(f"parameter {i}: shapes of value {p.shape}, gradient {g.shape} and velocity {v.shape} differ")
        wd = cfg.weight_decay if decay_mask is None or decay_mask[i] else 0.0
        g_eff = g + wd * p if wd else g
        v = cfg.momentum * v + g_eff
        new_velocities.append(v)
        new_params.append(p - lr * v)
    return new_params, new_velocities


class SGD:
    """Optimizer updating :class:`Parameter` values in place and owning the velocity buffers."""

    def __init__(self, params: Sequence[Parameter], cfg: Optional[SGDConfig] = None):
        self.params = list(params)
        self.cfg = cfg or SGDConfig()
        self.velocities = [np.zeros_like(p.data) for p in self.params]
        self.decay_mask = [self.cfg.decay_norm_params or p.ndim > 1 for p in self.params]
        self.steps = 0

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self, lr: float) -> None:
        values, self.velocities = sgd_step(
            [p.data for p in self.params],
            [p.grad for p in self.params],
            self.velocities,
            lr,
            self.cfg,
            self.decay_mask,
        )
        for p, value in zip(self.params, values):
            p.data = value.astype(p.dtype, copy=False)
        self.steps += 1
