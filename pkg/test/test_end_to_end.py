"""Toy run: synthetic data, default training, EMA extraction and evaluation."""

import pytest

from maskface_utils.config import RunConfig
from maskface_utils.core.extractor import extract_embeddings, load_backbone
from maskface_utils.core.trainer import Trainer
from maskface_utils.data.synth import SynthConfig, generate_dataset
from maskface_utils.evaluation.embeddings import verification_scores
from maskface_utils.evaluation.metrics import identification_top1
from maskface_utils.evaluation.report import EvalConfig, build_report


@pytest.mark.slow
def test_toy_recipe_separates_identities_with_and_without_masks(tmp_path):
    data = tmp_path / "data"
    summary = generate_dataset(data, SynthConfig(seed=0))
    assert sum(r.masked for r in summary.train) == 16 * 6

    cfg = RunConfig()
    assert cfg.loss.family == "arcface" and cfg.sampler.mask_ratio_cap == 0.1
    result = Trainer(cfg, summary.train, data).fit(tmp_path / "run")
    assert all(f <= 0.1 for f in result.masked_fractions)
    assert result.losses[-1] < result.losses[0]

    model = load_backbone(cfg.backbone, result.ema_checkpoint)
    gallery = extract_embeddings(model, summary.train, data).embeddings
    probe = extract_embeddings(model, summary.holdout, data).embeddings
    identities = {r.image_path: r.identity for r in summary.train + summary.holdout}
    assert identification_top1(gallery, probe, identities) >= 0.9

    scores = verification_scores(probe, summary.pairs)
    report = build_report(scores, summary.pairs, EvalConfig(far_targets=[1e-2], operating_far=1e-2))
    masked_tar = report.groups["masked"].points[1e-2].tar
    unmasked_tar = report.groups["unmasked"].points[1e-2].tar
    assert abs(masked_tar - unmasked_tar) <= 0.1
