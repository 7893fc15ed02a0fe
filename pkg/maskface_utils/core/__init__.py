"""Training loop, preprocessing and embedding extraction"""

from maskface_utils.core.extractor import ExtractionResult, extract_embeddings, load_backbone
from maskface_utils.core.trainer import Trainer, TrainResult, ema_checkpoint_path

__all__ = [
    "ExtractionResult",
    "extract_embeddings",
    "load_backbone",
    "Trainer",
    "TrainResult",
    "ema_checkpoint_path",
]
