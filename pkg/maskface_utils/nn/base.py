"""Module base class: parameter registration, train/eval mode and state dictionaries."""

from collections import OrderedDict
from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

from maskface_utils.exceptions import CheckpointError
from maskface_utils.tensor.engine import Parameter
from maskface_utils.tensor.ops import BatchNormState


class Module:
    """
    Base class for network components.

    Parameters, child modules and batch-norm states assigned as attributes are registered in
    assignment order, which fixes their hierarchical checkpoint names.
    """

    def __init__(self):
        object.__setattr__(self, "_parameters", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())
        object.__setattr__(self, "_states", OrderedDict())
        self.training = True

    def __setattr__(self, name, value):
        if "_parameters" not in self.__dict__:
            raise AttributeError("Module.__init__() must run before assigning attributes")
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        elif isinstance(value, BatchNormState):
            self._states[name] = value
        object.__setattr__(self, name, value)

    def forward(self, *args, **kwargs):
        raise NotImplementedError(f"{type(self).__name__} must implement forward()")

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_modules(self, prefix: str = "") -> Iterator[Tuple[str, "Module"]]:
        yield prefix, self
        for name, module in self._modules.items():
            yield from module.named_modules(f"{prefix}.{name}" if prefix else name)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for module_name, module in self.named_modules(prefix):
            for name, param in module._parameters.items():
                yield (f"{module_name}.{name}" if module_name else name), param

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        """Running statistics of every batch-norm state that has seen a training batch."""
        for module_name, module in self.named_modules(prefix):
            for name, state in module._states.items():
                base = f"{module_name}.{name}" if module_name else name
                if state.initialized:
                    yield f"{base}.running_mean", state.running_mean
                    yield f"{base}.running_var", state.running_var

    def _named_states(self) -> Iterator[Tuple[str, BatchNormState]]:
        for module_name, module in self.named_modules():
            for name, state in module._states.items():
                yield (f"{module_name}.{name}" if module_name else name), state

    def train(self, mode: bool = True) -> "Module":
        for _, module in self.named_modules():
            object.__setattr__(module, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        """Parameter values followed by batch-norm running statistics, keyed by dotted name."""
        state: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name, p in self.named_parameters():
            state[name] = p.data
        for name, buf in self.named_buffers():
            state[name] = buf
        return state

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True) -> None:
        """
        Copy values from ``state`` into this module.

        Args:
            state: Name to array mapping, as produced by :meth:`state_dict`
            strict: Reject missing and unexpected names, batch-norm running statistics included

        Raises:
            CheckpointError: Naming the first offending tensor
        """
        remaining: Dict[str, np.ndarray] = dict(state)
        for name, p in self.named_parameters():
            if name not in remaining:
                if strict:
                    raise CheckpointError("missing from checkpoint", tensor=name)
                continue
            value = np.asarray(remaining.pop(name))
            if value.shape != p.shape:
                raise CheckpointError(
                    f"shape {value.shape} in checkpoint, model expects {p.shape}", tensor=name
                )
            p.data = value.astype(p.dtype, copy=True)

        for base, bn_state in self._named_states():
            mean_key, var_key = f"{base}.running_mean", f"{base}.running_var"
            if mean_key not in remaining and var_key not in remaining and not strict:
                continue
            if mean_key not in remaining or var_key not in remaining:
                missing = mean_key if mean_key not in remaining else var_key
                raise CheckpointError("missing from checkpoint", tensor=missing)
            mean = np.asarray(remaining.pop(mean_key), dtype=np.float64)
            var = np.asarray(remaining.pop(var_key), dtype=np.float64)
            expected = (bn_state.num_features,)
            for key, value in ((mean_key, mean), (var_key, var)):
                if bn_state.num_features is not None and value.shape != expected:
                    raise CheckpointError(
                        f"shape {value.shape} in checkpoint, model expects {expected}", tensor=key
                    )
            bn_state.running_mean = mean.copy()
            bn_state.running_var = var.copy()

        if strict and remaining:
            name = sorted(remaining)[0]
            raise CheckpointError("unexpected tensor in checkpoint", tensor=name)
