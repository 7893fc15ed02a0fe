"""Embedding sets, verification and identification metrics, and reports."""

from maskface_utils.evaluation.embeddings import (
    EmbeddingSet,
    concat_features,
    load_embeddings,
    save_embeddings,
    verification_scores,
)
from maskface_utils.evaluation.metrics import (
    FarPoint,
    identification_top1,
    tar_at_far,
    weighted_mfr,
)
from maskface_utils.evaluation.report import EvalConfig, MetricReport, build_report

__all__ = [
    "EmbeddingSet",
    "concat_features",
    "load_embeddings",
    "save_embeddings",
    "verification_scores",
    "FarPoint",
    "identification_top1",
    "tar_at_far",
    "weighted_mfr",
    "EvalConfig",
    "MetricReport",
    "build_report",
]
