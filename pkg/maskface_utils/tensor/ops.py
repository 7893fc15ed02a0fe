"""Differentiable tensor operations.

Every function takes and returns :class:`Tensor` objects, computes its forward value with numpy
and registers a vector-Jacobian product on the active tape. 4-D data is laid out as
[batch, channels, height, width].
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from maskface_utils.exceptions import DimensionError, ParameterError, StateError
from maskface_utils.tensor.engine import Tensor, apply

# -- elementwise and reductions -----------------------------------------------------------------


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(x: Tensor, y: Tensor) -> Tensor:
    """Elementwise sum of two tensors of identical shape."""
    if x.shape != y.shape:
        raise DimensionError(f"add needs identical shapes, got {x.shape} and {y.shape}")

    def backward(g):
        return g, g

    return apply("add", (x, y), x.data + y.data, backward)


def mul(x: Tensor, y: Tensor) -> Tensor:
    """Elementwise product with numpy broadcasting."""
    try:
        out = x.data * y.data
    except ValueError as e:
        raise DimensionError(f"mul cannot broadcast {x.shape} with {y.shape}") from e

    def backward(g):
        return _unbroadcast(g * y.data, x.shape), _unbroadcast(g * x.data, y.shape)

    return apply("mul", (x, y), out, backward)


def sum(x: Tensor) -> Tensor:  # noqa: A001 - mirrors Tensor.sum
    """Sum of all elements as a scalar tensor."""

    def backward(g):
        return (np.broadcast_to(g, x.shape).astype(x.dtype),)

    return apply("sum", (x,), np.asarray(x.data.sum(), dtype=x.dtype), backward)


def mean(x: Tensor) -> Tensor:
    """Mean of all elements as a scalar tensor."""
    n = x.size

    def backward(g):
        return (np.full(x.shape, g / n, dtype=x.dtype),)

    return apply("mean", (x,), np.asarray(x.data.mean(), dtype=x.dtype), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return apply("relu", (x,), np.where(mask, x.data, 0).astype(x.dtype), backward)


def sigmoid(x: Tensor) -> Tensor:
    # split by sign so exp never overflows
    z = np.exp(-np.abs(x.data))
    out = np.where(x.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(x.dtype)

    def backward(g):
        return (g * out * (1.0 - out),)

    return apply("sigmoid", (x,), out, backward)


def prelu(x: Tensor, a: Tensor) -> Tensor:
    """
    Parametric ReLU: y = x for x >= 0, y = a * x otherwise.

    ``a`` holds one slope shared by all channels or one slope per channel (axis 1).
    """
    if a.ndim != 1 or (a.shape[0] != 1 and (x.ndim < 2 or a.shape[0] != x.shape[1])):
        raise DimensionError(f"prelu slope shape {a.shape} does not fit input {x.shape}")
    view = (1, a.shape[0]) + (1,) * (x.ndim - 2) if x.ndim >= 2 else (a.shape[0],)
    slope = a.data.reshape(view)
    positive = x.data >= 0
    out = np.where(positive, x.data, slope * x.data)

    def backward(g):
        gx = np.where(positive, g, slope * g)
        ga = _unbroadcast(np.where(positive, 0, g * x.data), view).reshape(a.shape)
        return gx, ga

    return apply("prelu", (x, a), out, backward)


# -- shape manipulation -------------------------------------------------------------------------


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(shape)
    except ValueError as e:
        raise DimensionError(f"cannot reshape {x.shape} to {tuple(shape)}") from e

    def backward(g):
        return (g.reshape(x.shape),)

    return apply("reshape", (x,), out, backward)


def flatten(x: Tensor) -> Tensor:
    """[b, ...] -> [b, prod(...)]"""
    if x.ndim < 2:
        raise DimensionError(f"flatten needs a batch dimension, got shape {x.shape}")
    return reshape(x, (x.shape[0], -1))


def concat(xs: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate tensors whose shapes agree everywhere except ``axis``."""
    if not xs:
        raise DimensionError("concat needs at least one tensor")
    ref = xs[0].shape
    axis = axis % len(ref)
    for t in xs[1:]:
        if t.ndim != len(ref) or any(
            s != r for i, (s, r) in enumerate(zip(t.shape, ref)) if i != axis
        ):
            raise DimensionError(f"concat along axis {axis}: shape {t.shape} does not match {ref}")
    sizes = [t.shape[axis] for t in xs]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return apply("concat", tuple(xs), np.concatenate([t.data for t in xs], axis=axis), backward)


def l2_normalize(x: Tensor, axis: int = 1, eps: float = 1e-12) -> Tensor:
    """Scale each slice along ``axis`` to unit Euclidean norm; norms below eps divide by eps."""
    norm = np.sqrt((x.data * x.data).sum(axis=axis, keepdims=True))
    denom = np.maximum(norm, eps)
    out = x.data / denom
    guarded = norm <= eps

    def backward(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        gx = np.where(guarded, g / denom, (g - out * dot) / denom)
        return (gx.astype(x.dtype),)

    return apply("l2_normalize", (x,), out, backward)


def space_to_depth(x: Tensor) -> Tensor:
    """
    Fold each 2x2 spatial neighbourhood into channels: [b,c,h,w] -> [b,4c,h/2,w/2].

    Channel blocks are ordered (even-h, even-w), (even-h, odd-w), (odd-h, even-w), (odd-h, odd-w).
    """
    _require_4d(x, "space_to_depth")
    b, c, h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"space_to_depth needs even height and width, got {h}x{w}")
    d = x.data
    out = np.concatenate([d[:, :, 0::2, 0::2], d[:, :, 0::2, 1::2],
                          d[:, :, 1::2, 0::2], d[:, :, 1::2, 1::2]], axis=1)

    def backward(g):
        return (_depth_to_space(g),)

    return apply("space_to_depth", (x,), out, backward)


def _depth_to_space(d: np.ndarray) -> np.ndarray:
    b, c4, h, w = d.shape
    c = c4 // 4
    out = np.empty((b, c, 2 * h, 2 * w), dtype=d.dtype)
    out[:, :, 0::2, 0::2] = d[:, 0 * c:1 * c]
    out[:, :, 0::2, 1::2] = d[:, 1 * c:2 * c]
    out[:, :, 1::2, 0::2] = d[:, 2 * c:3 * c]
    out[:, :, 1::2, 1::2] = d[:, 3 * c:4 * c]
    return out


def depth_to_space(x: Tensor) -> Tensor:
    """Inverse of :func:`space_to_depth`."""
    _require_4d(x, "depth_to_space")
    if x.shape[1] % 4:
        raise DimensionError(f"depth_to_space needs channels divisible by 4, got {x.shape[1]}")
    d = x.data
    b, c4, h, w = d.shape

    def backward(g):
        c = c4 // 4
        return (np.concatenate([g[:, :, 0::2, 0::2], g[:, :, 0::2, 1::2],
                                g[:, :, 1::2, 0::2], g[:, :, 1::2, 1::2]], axis=1)[:, :4 * c],)

    return apply("depth_to_space", (x,), _depth_to_space(d), backward)


# -- convolution and pooling --------------------------------------------------------------------


def _require_4d(x: Tensor, op: str) -> None:
    if x.ndim != 4:
        raise DimensionError(f"{op} expects [b,c,h,w], got shape {x.shape}")


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def _windows(xp: np.ndarray, kh: int, kw: int, stride: int, oh: int, ow: int) -> np.ndarray:
    """im2col: [b,c,H,W] -> [b,c,kh,kw,oh,ow]"""
    b, c = xp.shape[:2]
    cols = np.empty((b, c, kh, kw, oh, ow), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride]
    return cols


def _fold(cols: np.ndarray, shape, stride: int) -> np.ndarray:
    """col2im: scatter-add [b,c,kh,kw,oh,ow] windows back onto a [b,c,H,W] canvas."""
    out = np.zeros(shape, dtype=cols.dtype)
    kh, kw, oh, ow = cols.shape[2:]
    for i in range(kh):
        for j in range(kw):
            out[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += cols[:, :, i, j]
    return out


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    2-D cross-correlation.

    Args:
        x: Input [b, c, h, w]
        weight: Kernels [c_out, c, kh, kw]
        bias: Optional [c_out]
        stride: Positive step in both spatial dimensions
        padding: Zero padding added on every side

    Returns:
        [b, c_out, floor((h + 2p - kh)/s) + 1, floor((w + 2p - kw)/s) + 1]
    """
    _require_4d(x, "conv2d")
    if weight.ndim != 4:
        raise DimensionError(f"conv2d weight must be [c_out,c,kh,kw], got {weight.shape}")
    if stride < 1 or padding < 0:
        raise ParameterError(f"conv2d needs stride >= 1 and padding >= 0, got {stride}, {padding}")
    b, c, h, w = x.shape
    c_out, c_in, kh, kw = weight.shape
    if c != c_in:
        raise DimensionError(f"conv2d input has {c} channels but weight expects {c_in}")
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise DimensionError(f"conv2d kernel {kh}x{kw} larger than padded input {h}x{w}")
    if bias is not None and bias.shape != (c_out,):
        raise DimensionError(f"conv2d bias must be [{c_out}], got {bias.shape}")

    oh = conv_output_size(h, kh, stride, padding)
    ow = conv_output_size(w, kw, stride, padding)
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    cols = _windows(xp, kh, kw, stride, oh, ow)
    out = np.tensordot(cols, weight.data, axes=([1, 2, 3], [1, 2, 3]))  # [b, oh, ow, c_out]
    out = out.transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data.reshape(1, c_out, 1, 1)
    out = np.ascontiguousarray(out)

    def backward(g):
        gw = np.tensordot(g, cols, axes=([0, 2, 3], [0, 4, 5])) if weight.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = np.tensordot(g, weight.data, axes=([1], [0]))  # [b, oh, ow, c, kh, kw]
            gxp = _fold(gcols.transpose(0, 3, 4, 5, 1, 2), xp.shape, stride)
            gx = gxp[:, :, padding:padding + h, padding:padding + w] if padding else gxp
        gb = g.sum(axis=(0, 2, 3)) if bias is not None and bias.requires_grad else None
        return (gx, gw, gb) if bias is not None else (gx, gw)

    inputs = (x, weight, bias) if bias is not None else (x, weight)
    return apply("conv2d", inputs, out, backward)


def avg_pool2d(x: Tensor, k: int, stride: int) -> Tensor:
    """Mean over k x k windows taken every ``stride`` pixels."""
    _require_4d(x, "avg_pool2d")
    if k < 1 or stride < 1:
        raise ParameterError(f"avg_pool2d needs positive kernel and stride, got k={k}, stride={stride}")
    b, c, h, w = x.shape
    if h < k or w < k:
        raise DimensionError(f"avg_pool2d window {k} larger than input {h}x{w}")
    oh = conv_output_size(h, k, stride, 0)
    ow = conv_output_size(w, k, stride, 0)
    out = np.zeros((b, c, oh, ow), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            out += x.data[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride]
    out /= k * k

    def backward(g):
        share = g / (k * k)
        gx = np.zeros(x.shape, dtype=x.dtype)
        for i in range(k):
            for j in range(k):
                gx[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += share
        return (gx,)

    return apply("avg_pool2d", (x,), out, backward)


def global_avg_pool2d(x: Tensor) -> Tensor:
    """[b,c,h,w] -> [b,c] spatial mean."""
    _require_4d(x, "global_avg_pool2d")
    hw = x.shape[2] * x.shape[3]

    def backward(g):
        return (np.broadcast_to(g[:, :, None, None] / hw, x.shape).astype(x.dtype),)

    return apply("global_avg_pool2d", (x,), x.data.mean(axis=(2, 3)), backward)


# -- dense --------------------------------------------------------------------------------------


def fully_connected(x: Tensor, W: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Affine map [b,n] x [m,n]^T + [m] -> [b,m]."""
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[1]:
        raise DimensionError(f"fully_connected cannot apply weight {W.shape} to input {x.shape}")
    if bias is not None and bias.shape != (W.shape[0],):
        raise DimensionError(f"fully_connected bias must be [{W.shape[0]}], got {bias.shape}")
    out = x.data @ W.data.T
    if bias is not None:
        out = out + bias.data

    def backward(g):
        grads = [g @ W.data, g.T @ x.data]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return tuple(grads)

    inputs = (x, W, bias) if bias is not None else (x, W)
    return apply("fully_connected", inputs, out, backward)


# -- normalization ------------------------------------------------------------------------------


@dataclass
class BatchNormState:
    """Running statistics of a batch-norm layer; unset until the first training batch."""

    num_features: Optional[int] = None
    momentum: float = 0.1
    running_mean: Optional[np.ndarray] = None
    running_var: Optional[np.ndarray] = None
    batches_tracked: int = 0

    @property
    def initialized(self) -> bool:
        return self.running_mean is not None and self.running_var is not None

    def update(self, mean: np.ndarray, var: np.ndarray) -> None:
        if not self.initialized:
            self.running_mean = mean.copy()
            self.running_var = var.copy()
        else:
            m = self.momentum
            self.running_mean = (1 - m) * self.running_mean + m * mean
            self.running_var = (1 - m) * self.running_var + m * var
        self.batches_tracked += 1


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    state: BatchNormState,
    training: bool,
    eps: float = 1e-5,
) -> Tensor:
    """
    Per-channel normalization over every axis except 1.

    Training normalizes with batch statistics and folds them into ``state``; evaluation
    uses the running statistics.

    Raises:
        DimensionError: If gamma/beta do not have one entry per channel
        StateError: In evaluation mode before any training batch was seen
    """
    if x.ndim < 2:
        raise DimensionError(f"batch_norm needs [b,c,...], got shape {x.shape}")
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise DimensionError(f"batch_norm affine parameters must be [{c}], got {gamma.shape}, {beta.shape}")
    axes = (0,) + tuple(range(2, x.ndim))
    view = (1, c) + (1,) * (x.ndim - 2)
    n = x.size // c

    if training:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        state.update(mu, var * n / max(n - 1, 1))
    else:
        if not state.initialized:
            raise StateError("batch_norm evaluated before its running statistics were initialized")
        mu = state.running_mean.astype(x.dtype)
        var = state.running_var.astype(x.dtype)

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mu.reshape(view)) * inv_std.reshape(view)
    out = gamma.data.reshape(view) * x_hat + beta.data.reshape(view)

    def backward(g):
        g_gamma = (g * x_hat).sum(axis=axes)
        g_beta = g.sum(axis=axes)
        g_hat = g * gamma.data.reshape(view)
        if training:
            gx = (inv_std.reshape(view) / n) * (
                n * g_hat
                - g_hat.sum(axis=axes, keepdims=True)
                - x_hat * (g_hat * x_hat).sum(axis=axes, keepdims=True)
            )
        else:
            gx = g_hat * inv_std.reshape(view)
        return gx, g_gamma, g_beta

    return apply("batch_norm", (x, gamma, beta), out.astype(x.dtype), backward)


def batch_norm2d(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState,
                 training: bool, eps: float = 1e-5) -> Tensor:
    _require_4d(x, "batch_norm2d")
    return batch_norm(x, gamma, beta, state, training, eps)


def batch_norm1d(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState,
                 training: bool, eps: float = 1e-5) -> Tensor:
    if x.ndim != 2:
        raise DimensionError(f"batch_norm1d expects [b,n], got shape {x.shape}")
    return batch_norm(x, gamma, beta, state, training, eps)


__all__: List[str] = [
    "add", "mul", "sum", "mean", "relu", "sigmoid", "prelu", "reshape", "flatten", "concat",
    "l2_normalize", "space_to_depth", "depth_to_space", "conv2d", "conv_output_size",
    "avg_pool2d", "global_avg_pool2d", "fully_connected", "BatchNormState", "batch_norm",
    "batch_norm2d", "batch_norm1d",
]
