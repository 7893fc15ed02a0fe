#!/usr/bin/env python3
"""
CLI handler for embedding extraction and feature concatenation
"""

import sys
from pathlib import Path

from maskface_utils.cli import exit_with_error, prepare_output_file
from maskface_utils.config import RunConfig, load_config
from maskface_utils.core.extractor import extract_embeddings, load_backbone
from maskface_utils.core.trainer import RESOLVED_CONFIG_NAME, ema_checkpoint_path
from maskface_utils.data.manifest import load_manifest
from maskface_utils.evaluation.embeddings import concat_features, load_embeddings, save_embeddings
from maskface_utils.exceptions import ConfigurationError


def _run_config(args, checkpoint: Path) -> RunConfig:
    """--config if given, else the config echoed next to the checkpoint, else defaults."""
    if args.config:
        return load_config(args.config, args.seed)
    echoed = checkpoint.parent / RESOLVED_CONFIG_NAME
    if echoed.exists():
        print(f"Using configuration {echoed}", file=sys.stderr)
        return load_config(echoed, args.seed)
    return load_config(None, args.seed)


def extract(args):
    """Handle extract from CLI args"""
    try:
        if not args.out:
            raise ConfigurationError("extract needs --out FILE")

        if args.concat:
            a, b = (load_embeddings(p) for p in args.concat)
            joined = concat_features(a, b)
            out = prepare_output_file(args.out, args.force)
            save_embeddings(out, joined)
            print(f"Wrote {joined.count} embeddings of dim {joined.dim} to '{out}'")
            return

        if not args.checkpoint or not args.manifest:
            raise ConfigurationError("extract needs --checkpoint and --manifest (or --concat A B)")
        checkpoint = Path(args.checkpoint)
        cfg = _run_config(args, checkpoint)
        weights = ema_checkpoint_path(checkpoint) if args.use_ema else checkpoint
        model = load_backbone(cfg.backbone, weights)

        manifest = Path(args.manifest)
        records = load_manifest(manifest)
        out = prepare_output_file(args.out, args.force)
        result = extract_embeddings(model, records, manifest.parent, batch_size=args.batch_size)
        save_embeddings(out, result.embeddings)

        print(f"Wrote {result.embeddings.count} embeddings of dim {result.embeddings.dim} to '{out}'")
        print(f"Inference time: {result.inference_ms:.2f} ms/image")
        if result.errors:
            print(f"Skipped {len(result.errors)} images that could not be embedded", file=sys.stderr)
    except (KeyboardInterrupt, Exception) as e:
        exit_with_error(e)
