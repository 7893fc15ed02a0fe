#!/usr/bin/env python3
"""
CLI handler for verification and identification metrics
"""

from dataclasses import replace
from typing import Dict, List

from maskface_utils.cli import exit_with_error, prepare_output_file
from maskface_utils.config import load_config
from maskface_utils.data.manifest import load_manifest, load_pairs
from maskface_utils.evaluation.embeddings import load_embeddings, verification_scores
from maskface_utils.evaluation.metrics import identification_top1
from maskface_utils.evaluation.report import build_report
from maskface_utils.exceptions import ConfigurationError, ManifestValidationError


def parse_far_targets(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigurationError(f"--far-targets must be comma-separated numbers: {e}") from e


def identity_map(manifests: List[str]) -> Dict[str, int]:
    """Image path to identity across several manifests; a path may not change identity."""
    identities: Dict[str, int] = {}
    for path in manifests:
        for record in load_manifest(path, check_images=False):
            known = identities.setdefault(record.image_path, record.identity)
            if known != record.identity:
                raise ManifestValidationError(
                    f"{record.image_path} has identity {known} and {record.identity} in {path}"
                )
    return identities


def evaluate(args):
    """Handle eval from CLI args"""
    try:
        cfg = load_config(args.config, args.seed)
        eval_cfg = cfg.eval
        if args.far_targets:
            eval_cfg = replace(eval_cfg, far_targets=parse_far_targets(args.far_targets))

        embeddings = load_embeddings(args.embeddings)
        pairs = load_pairs(args.pairs)
        scores = verification_scores(embeddings, pairs)
        report = build_report(scores, pairs, eval_cfg)

        if args.gallery:
            if not args.identities:
                raise ConfigurationError("--gallery needs --identities MANIFEST...")
            gallery = load_embeddings(args.gallery)
            report.top1 = identification_top1(gallery, embeddings, identity_map(args.identities))

        print(report.to_text())
        if args.out:
            out = prepare_output_file(args.out, args.force)
            report.save(out)
    except (KeyboardInterrupt, Exception) as e:
        exit_with_error(e)
