"""Cosine classification heads with additive angular (ArcFace) and cosine (CosFace) margins."""

import math
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from maskface_utils.exceptions import (
    ConfigurationError,
    DimensionError,
    LabelIndexError,
    ParameterError,
)
from maskface_utils.nn.base import Module
from maskface_utils.tensor import ops
from maskface_utils.tensor.engine import Parameter, Tensor, apply

LOSS_FAMILIES = ("arcface", "cosface", "softmax")
DEFAULT_MARGINS = {"arcface": 0.5, "cosface": 0.35, "softmax": 0.0}

NORM_WARN_EPS = 1e-12
COS_EPS = 1e-7


@dataclass
class MarginConfig:
    """
    Loss family with scale ``s`` and margin ``m``.

    When ``m`` is None the family default is used: 0.5 for ArcFace, 0.35 for CosFace and 0 for
    plain softmax over scaled cosines.
    """

    family: str = "arcface"
    s: float = 64.0
    m: Optional[float] = None
    class_count: int = 1

    def __post_init__(self):
        if self.family not in LOSS_FAMILIES:
            raise ConfigurationError(f"loss.family must be one of {LOSS_FAMILIES}, got {self.family!r}")
        if self.m is None:
            self.m = DEFAULT_MARGINS[self.family]
        if self.s <= 0:
            raise ParameterError(f"loss.scale must be positive, got {self.s}")
        if self.m < 0:
            raise ParameterError(f"loss.margin must be non-negative, got {self.m}")
        if self.family == "arcface" and self.m >= math.pi:
            raise ParameterError(f"ArcFace margin must be below pi, got {self.m}")
        if self.family == "cosface" and self.m >= 1:
            raise ParameterError(f"CosFace margin must be below 1, got {self.m}")
        if self.class_count < 1:
            raise ParameterError(f"class_count must be positive, got {self.class_count}")


def _labels(labels, batch: int, classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != batch:
        raise DimensionError(f"expected {batch} labels, got {labels.shape[0]}")
    bad = labels[(labels < 0) | (labels >= classes)]
    if bad.size:
        raise LabelIndexError(f"label {int(bad[0])} outside [0, {classes})")
    return labels


def cosine_logits(embeddings: Tensor, weights: Tensor) -> Tensor:
    """
    Cosine similarity between every embedding and every class weight row.

    Both sides are L2-normalized inside the operation; near-zero norms are eps-guarded and
    reported on stderr.
    """
    if embeddings.ndim != 2 or weights.ndim != 2 or embeddings.shape[1] != weights.shape[1]:
        raise DimensionError(
            f"cosine_logits cannot match embeddings {embeddings.shape} with weights {weights.shape}"
        )
    for name, t in (("embedding", embeddings), ("class weight", weights)):
        norms = np.sqrt((t.data.astype(np.float64) ** 2).sum(axis=1))
        if np.any(norms < NORM_WARN_EPS):
            print(f"Warning: {int((norms < NORM_WARN_EPS).sum())} {name} vector(s) with "
                  f"norm below {NORM_WARN_EPS}", file=sys.stderr)
    return ops.fully_connected(ops.l2_normalize(embeddings, axis=1), ops.l2_normalize(weights, axis=1))


def arcface_logits(cosines: Tensor, labels: Sequence[int], s: float, m: float) -> Tensor:
    """
    s*cos(theta + m) on the target class and s*cos(theta) elsewhere.

    The target cosine is capped at 1 - COS_EPS before arccos so d(theta)/d(cos) stays finite, and
    theta + m is clamped at pi, where the target gradient becomes zero.
    """
    b, n = cosines.shape
    labels = _labels(labels, b, n)
    rows = np.arange(b)
    c = np.clip(cosines.data.astype(np.float64), -1.0, 1.0)
    target = np.minimum(c[rows, labels], 1.0 - COS_EPS)
    theta = np.arccos(target)
    shifted = theta + m
    clamped = shifted >= math.pi
    shifted = np.minimum(shifted, math.pi)
    out = s * c
    out[rows, labels] = s * np.cos(shifted)

    def backward(g):
        grad = g * s
        sin_theta = np.maximum(np.sqrt(1.0 - target ** 2), 1e-12)
        local = np.where(clamped, 0.0, np.sin(shifted) / sin_theta)
        grad[rows, labels] = g[rows, labels] * s * local
        return (grad,)

    return apply("arcface_logits", (cosines,), out.astype(cosines.dtype), backward)


def cosface_logits(cosines: Tensor, labels: Sequence[int], s: float, m: float) -> Tensor:
    """s*(cos - m) on the target class and s*cos elsewhere."""
    b, n = cosines.shape
    labels = _labels(labels, b, n)
    rows = np.arange(b)
    out = s * cosines.data
    out[rows, labels] -= s * m

    def backward(g):
        return (g * s,)

    return apply("cosface_logits", (cosines,), out.astype(cosines.dtype), backward)


def margin_logits(cosines: Tensor, labels: Sequence[int], cfg: MarginConfig) -> Tensor:
    if cfg.family == "arcface":
        return arcface_logits(cosines, labels, cfg.s, cfg.m)
    if cfg.family == "cosface":
        return cosface_logits(cosines, labels, cfg.s, cfg.m)
    return cosface_logits(cosines, labels, cfg.s, 0.0)


def softmax_cross_entropy(logits: Tensor, labels: Sequence[int]) -> Tensor:
    """Batch mean of -log softmax(logits)[label], stabilized by max-subtraction."""
    if logits.ndim != 2:
        raise DimensionError(f"softmax_cross_entropy expects [b,n] logits, got {logits.shape}")
    b, n = logits.shape
    if b == 0:
        raise ParameterError("softmax_cross_entropy needs a non-empty batch")
    labels = _labels(labels, b, n)
    rows = np.arange(b)
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    log_prob = shifted - np.log(total)
    loss = -log_prob[rows, labels].mean()
    probs = exp / total

    def backward(g):
        grad = probs.copy()
        grad[rows, labels] -= 1.0
        return (grad * (g / b),)

    return apply("softmax_cross_entropy", (logits,), np.asarray(loss, dtype=logits.dtype), backward)


class MarginHead(Module):
    """Learnable class weights [class_count, dim] followed by the configured margin loss."""

    def __init__(self, cfg: MarginConfig, embedding_dim: int = 512,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.cfg = cfg
        rng = rng or np.random.default_rng(0)
        self.weight = Parameter(rng.normal(0.0, 0.01, size=(cfg.class_count, embedding_dim)))

    def logits(self, embeddings: Tensor, labels: Sequence[int]) -> Tensor:
        return margin_logits(cosine_logits(embeddings, self.weight), labels, self.cfg)

    def forward(self, embeddings: Tensor, labels: Sequence[int]) -> Tensor:
        return softmax_cross_entropy(self.logits(embeddings, labels), labels)
