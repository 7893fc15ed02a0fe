"""Dense tensors, differentiable operations and the weight file format."""

from maskface_utils.tensor import ops
from maskface_utils.tensor.checkpoint import load_weights, save_weights
from maskface_utils.tensor.engine import (
    Parameter,
    Tape,
    Tensor,
    backward,
    current_tape,
    get_default_dtype,
    precision,
)

__all__ = [
    "Tensor",
    "Parameter",
    "Tape",
    "backward",
    "current_tape",
    "get_default_dtype",
    "precision",
    "ops",
    "save_weights",
    "load_weights",
]
