"""Embedding extraction from a trained checkpoint."""

import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from maskface_utils.core.preprocess import batch_bounds, eval_view, to_input
from maskface_utils.data.imageio import read_image
from maskface_utils.data.manifest import ManifestRecord, resolve_image_path
from maskface_utils.evaluation.embeddings import EmbeddingSet
from maskface_utils.exceptions import FileFormatError, GeometryError
from maskface_utils.nn.backbone import Backbone, BackboneConfig
from maskface_utils.tensor.checkpoint import load_weights

PathLike = Union[str, Path]


@dataclass
class ExtractionResult:
    embeddings: EmbeddingSet
    inference_ms: float

    @property
    def errors(self) -> Dict[str, str]:
        return self.embeddings.errors


def load_backbone(cfg: BackboneConfig, checkpoint: PathLike) -> Backbone:
    """
    Build a backbone from its config and load checkpoint weights in evaluation mode.

    Raises:
        FileFormatError: Unreadable checkpoint
        CheckpointError: Checkpoint tensors that do not fit the config, naming the tensor
    """
    checkpoint = Path(checkpoint)
    if not checkpoint.exists():
        raise FileFormatError(f"Checkpoint not found: {checkpoint}")
    model = Backbone(cfg)
    model.load_state_dict(load_weights(checkpoint))
    return model.eval()


def extract_embeddings(
    model: Backbone,
    records: Sequence[ManifestRecord],
    base_dir: PathLike,
    batch_size: int = 64,
) -> ExtractionResult:
    """
    Embed every distinct image of a manifest, keyed by its manifest path.

    Images that cannot be read or aligned are recorded in ``errors`` and skipped.
    """
    base_dir = Path(base_dir)
    size = model.cfg.input_size
    model.eval()

    keys: List[str] = []
    views: List[np.ndarray] = []
    errors: Dict[str, str] = {}
    seen = set()
    for record in records:
        key = record.image_path
        if key in seen:
            continue
        seen.add(key)
        try:
            image = read_image(resolve_image_path(key, base_dir))
            views.append(eval_view(image, record.landmark_array(), size))
            keys.append(key)
        except (FileFormatError, GeometryError) as e:
            print(f"Warning: skipping {key}: {e}", file=sys.stderr)
            errors[key] = str(e)

    dim = model.cfg.embedding_dim
    vectors = np.zeros((len(keys), dim), dtype=np.float32)
    elapsed = 0.0
    for start, stop in batch_bounds(len(keys), batch_size):
        print(f"Processing images {start + 1}-{stop} of {len(keys)}...", file=sys.stderr)
        batch = to_input(views[start:stop])
        began = time.perf_counter()
        vectors[start:stop] = model(batch).numpy()
        elapsed += time.perf_counter() - began

    inference_ms = 1000.0 * elapsed / len(keys) if keys else 0.0
    embeddings = EmbeddingSet(dim=dim, keys=keys, vectors=vectors, errors=errors)
    return ExtractionResult(embeddings=embeddings, inference_ms=inference_ms)
