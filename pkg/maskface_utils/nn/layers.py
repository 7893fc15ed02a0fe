"""Parameterised layers wrapping the tensor operations."""

from typing import Optional

import numpy as np

from maskface_utils.exceptions import ParameterError
from maskface_utils.nn.base import Module
from maskface_utils.tensor import ops
from maskface_utils.tensor.engine import Parameter, Tensor
from maskface_utils.tensor.ops import BatchNormState


def he_normal(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: int = 0,
        bias: bool = True,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        if min(in_channels, out_channels, kernel_size) < 1:
            raise ParameterError(
                f"Conv2d needs positive sizes, got in={in_channels} out={out_channels} k={kernel_size}"
            )
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kernel_size * kernel_size
        self.stride = stride
        self.padding = padding
        self.weight = Parameter(
            he_normal(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in)
        )
        if bias:
            self.bias = Parameter(np.zeros(out_channels))
        else:
            self.bias = None

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class BatchNorm(Module):
    """Batch normalization over axis 1 for [b,c,h,w] or [b,n] inputs."""

    def __init__(self, num_features: int, eps: float = 1e-5, momentum: float = 0.1):
        super().__init__()
        self.eps = eps
        self.weight = Parameter(np.ones(num_features))
        self.bias = Parameter(np.zeros(num_features))
        self.state = BatchNormState(num_features=num_features, momentum=momentum)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim == 4:
            return ops.batch_norm2d(x, self.weight, self.bias, self.state, self.training, self.eps)
        return ops.batch_norm1d(x, self.weight, self.bias, self.state, self.training, self.eps)


class PReLU(Module):
    def __init__(self, num_parameters: int = 1, init: float = 0.25):
        super().__init__()
        self.weight = Parameter(np.full(num_parameters, init))

    def forward(self, x: Tensor) -> Tensor:
        return ops.prelu(x, self.weight)


class Linear(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        bias: bool = True,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.weight = Parameter(he_normal(rng, (out_features, in_features), in_features))
        if bias:
            self.bias = Parameter(np.zeros(out_features))
        else:
            self.bias = None

    def forward(self, x: Tensor) -> Tensor:
        return ops.fully_connected(x, self.weight, self.bias)
