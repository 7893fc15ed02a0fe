"""Verification and identification metrics."""

from dataclasses import dataclass
from typing import Dict, Mapping, Sequence

import numpy as np

from maskface_utils.evaluation.embeddings import EmbeddingSet, l2_normalize_rows
from maskface_utils.exceptions import MetricError, ParameterError, SetError


@dataclass(frozen=True)
class FarPoint:
    """Operating point for one FAR target."""

    far_target: float
    tar: float
    threshold: float
    far: float


def candidate_thresholds(scores: np.ndarray) -> np.ndarray:
    """Every distinct score plus one value above the maximum (accepts nothing)."""
    scores = np.asarray(scores, dtype=np.float64)
    top = np.nextafter(scores.max(), np.inf)
    return np.unique(np.append(scores, top))


def tar_at_far(
    scores: Sequence[float],
    labels: Sequence[bool],
    far_targets: Sequence[float],
) -> Dict[float, FarPoint]:
    """
    True accept rate at each false accept rate target.

    A pair is accepted when score >= threshold. The threshold for target f is the smallest
    candidate t with (negatives >= t) / negatives <= f.

    Raises:
        MetricError: If there are no positive or no negative pairs
        ParameterError: If a FAR target is outside (0, 1]
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise ParameterError(f"{scores.size} scores but {labels.size} labels")
    positives = np.sort(scores[labels])
    negatives = np.sort(scores[~labels])
    if negatives.size == 0:
        raise MetricError("TAR@FAR is undefined without negative pairs")
    if positives.size == 0:
        raise MetricError("TAR@FAR is undefined without positive pairs")

    candidates = candidate_thresholds(scores)
    false_accepts = negatives.size - np.searchsorted(negatives, candidates, side="left")
    far = false_accepts / negatives.size

    result: Dict[float, FarPoint] = {}
    for f in far_targets:
        if not 0 < f <= 1:
            raise ParameterError(f"FAR target must be in (0, 1], got {f}")
        i = int(np.argmax(far <= f))  # far is non-increasing, last candidate has far 0
        t = candidates[i]
        tar = (positives.size - np.searchsorted(positives, t, side="left")) / positives.size
        result[f] = FarPoint(far_target=f, tar=float(tar), threshold=float(t), far=float(far[i]))
    return result


def identification_top1(
    gallery: EmbeddingSet,
    probe: EmbeddingSet,
    identities: Mapping[str, int],
) -> float:
    """
    Fraction of probes whose most similar gallery entry has the same identity.

    Gallery keys are visited in lexicographic order so ties go to the lowest key.

    Raises:
        MetricError: Empty probe or gallery set
        SetError: A key without a known identity
    """
    if probe.count == 0:
        raise MetricError("identification needs at least one probe")
    if gallery.count == 0:
        raise MetricError("identification needs a non-empty gallery")
    missing = {k for k in list(gallery.keys) + list(probe.keys) if k not in identities}
    if missing:
        raise SetError("no identity known for keys", missing=missing)

    gallery_keys = sorted(gallery.keys)
    g = l2_normalize_rows(gallery.lookup(gallery_keys))
    p = l2_normalize_rows(probe.vectors)
    best = np.argmax(p @ g.T, axis=1)
    predicted = np.array([identities[gallery_keys[i]] for i in best])
    actual = np.array([identities[k] for k in probe.keys])
    return float(np.mean(predicted == actual))


def weighted_mfr(old_masked: float, sfr: float, masked_weight: float = 0.25) -> float:
    """masked_weight * old_masked + (1 - masked_weight) * sfr, with the default 0.25/0.75 split."""
    for name, value in (("old_masked", old_masked), ("sfr", sfr), ("masked_weight", masked_weight)):
        if not 0 <= value <= 1:
            raise ParameterError(f"{name} must be in [0, 1], got {value}")
    return masked_weight * old_masked + (1.0 - masked_weight) * sfr
