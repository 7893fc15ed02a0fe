"""Margin-based classification losses."""

from maskface_utils.losses.margin import (
    LOSS_FAMILIES,
    MarginConfig,
    MarginHead,
    arcface_logits,
    cosface_logits,
    cosine_logits,
    margin_logits,
    softmax_cross_entropy,
)

__all__ = [
    "LOSS_FAMILIES",
    "MarginConfig",
    "MarginHead",
    "arcface_logits",
    "cosface_logits",
    "cosine_logits",
    "margin_logits",
    "softmax_cross_entropy",
]
