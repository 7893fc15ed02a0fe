"""Exponential moving average of model parameters."""

from collections import OrderedDict
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, Tuple

import numpy as np

from maskface_utils.exceptions import ParameterError, StateError
from maskface_utils.tensor.engine import Parameter

NamedParams = Iterable[Tuple[str, Parameter]]


@dataclass
class EMAConfig:
    """EMA settings; with ``warmup`` the effective decay is min(decay, (1+n)/(10+n))."""

    enabled: bool = True
    decay: float = 0.999
    warmup: bool = False

    def __post_init__(self):
        if not 0 < self.decay < 1:
            raise ParameterError(f"ema.decay must be in (0, 1), got {self.decay}")


@dataclass
class EMAState:
    decay: float
    shadow: Dict[str, np.ndarray] = field(default_factory=OrderedDict)
    warmup: bool = False
    updates: int = 0

    def effective_decay(self) -> float:
        if not self.warmup:
            return self.decay
        n = self.updates
        return min(self.decay, (1.0 + n) / (10.0 + n))


def ema_init(params: NamedParams, decay: float = 0.999, warmup: bool = False) -> EMAState:
    """Start the shadow as a copy of the current parameters."""
    if not 0 < decay < 1:
        raise ParameterError(f"EMA decay must be in (0, 1), got {decay}")
    shadow = OrderedDict((name, p.data.copy()) for name, p in params)
    return EMAState(decay=decay, shadow=shadow, warmup=warmup)


def _check(state: EMAState, params: Dict[str, Parameter]) -> None:
    if set(params) != set(state.shadow):
        missing = sorted(set(state.shadow) ^ set(params))
        raise StateError(f"EMA shadow and parameters disagree on names: {', '.join(missing[:5])}")
    for name, p in params.items():
        if state.shadow[name].shape != p.shape:
            raise StateError(
                f"EMA shadow for {name} has shape {state.shadow[name].shape}, parameter has {p.shape}"
            )


def ema_update(state: EMAState, params: NamedParams) -> EMAState:
    """shadow = d*shadow + (1-d)*param for every parameter, once per optimizer step."""
    params = OrderedDict(params)
    _check(state, params)
    d = state.effective_decay()
    for name, p in params.items():
        state.shadow[name] = (d * state.shadow[name] + (1.0 - d) * p.data).astype(p.dtype)
    state.updates += 1
    return state


def ema_swap(state: EMAState, params: NamedParams) -> None:
    """Exchange parameter values with the shadow; calling it twice restores both exactly."""
    params = OrderedDict(params)
    _check(state, params)
    for name, p in params.items():
        p.data, state.shadow[name] = state.shadow[name], p.data


class ModelEMA:
    """EMA bound to a module's named parameters."""

    def __init__(self, module, cfg: EMAConfig):
        self.module = module
        self.cfg = cfg
        self.state = ema_init(module.named_parameters(), cfg.decay, cfg.warmup)

    def update(self) -> None:
        ema_update(self.state, self.module.named_parameters())

    def swap(self) -> None:
        ema_swap(self.state, self.module.named_parameters())

    @contextmanager
    def swapped(self) -> Iterator[None]:
        """Run the block with shadow weights loaded into the module."""
        self.swap()
        try:
            yield
        finally:
            self.swap()
