"""Dataset manifests, sampling, masks, augmentation, alignment and synthetic data."""

from maskface_utils.data.align import (
    ALIGNED_SIZE,
    TEMPLATE_112,
    align_face,
    estimate_similarity,
    transform_points,
    warp_to_template,
)
from maskface_utils.data.augment import AugConfig, AugPlan, apply_plan, augment, sample_plan
from maskface_utils.data.imageio import ImageFileHandler, read_image, write_image
from maskface_utils.data.manifest import (
    ManifestRecord,
    PairRecord,
    load_manifest,
    load_pairs,
    write_manifest,
    write_pairs,
)
from maskface_utils.data.mask import MaskedFace, MaskTemplate, apply_mask_overlay
from maskface_utils.data.sampler import EpochPlan, SamplerConfig, plan_epoch

__all__ = [
    "ALIGNED_SIZE",
    "TEMPLATE_112",
    "align_face",
    "estimate_similarity",
    "transform_points",
    "warp_to_template",
    "AugConfig",
    "AugPlan",
    "apply_plan",
    "augment",
    "sample_plan",
    "ImageFileHandler",
    "read_image",
    "write_image",
    "ManifestRecord",
    "PairRecord",
    "load_manifest",
    "load_pairs",
    "write_manifest",
    "write_pairs",
    "MaskTemplate",
    "MaskedFace",
    "apply_mask_overlay",
    "EpochPlan",
    "SamplerConfig",
    "plan_epoch",
]
