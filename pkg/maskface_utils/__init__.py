"""
Maskface Utils - desk-scale masked face recognition training and evaluation

This package provides a small numpy autodiff engine, a residual backbone with a two-branch
stem unit, SE blocks and DropBlock, margin losses, a cyclic cosine schedule with EMA,
mask-balanced sampling, five-point alignment and TAR@FAR based verification metrics.
"""

from maskface_utils.__version__ import __version__
from maskface_utils.config import RunConfig, TrainConfig, load_config
from maskface_utils.exceptions import (
    CheckpointError,
    ConfigurationError,
    FileFormatError,
    ManifestError,
    MaskFaceError,
    MetricError,
    NumericalError,
    TrainingDivergedError,
    ValidationError,
)

__all__ = [
    "__version__",
    "RunConfig",
    "TrainConfig",
    "load_config",
    "MaskFaceError",
    "ValidationError",
    "ConfigurationError",
    "ManifestError",
    "CheckpointError",
    "FileFormatError",
    "MetricError",
    "NumericalError",
    "TrainingDivergedError",
]
