#!/usr/bin/env python3
"""
CLI handler for training
"""

from dataclasses import replace
from pathlib import Path

from maskface_utils.cli import exit_with_error, prepare_output_dir
from maskface_utils.config import load_config
from maskface_utils.core.trainer import Trainer
from maskface_utils.data.manifest import load_manifest
from maskface_utils.exceptions import ConfigurationError


def train(args):
    """Handle train from CLI args"""
    try:
        cfg = load_config(args.config, args.seed)
        if args.manifest:
            cfg = replace(cfg, train=replace(cfg.train, manifest=args.manifest))
        if not cfg.train.manifest:
            raise ConfigurationError("no training manifest: pass --manifest or set train.manifest")
        if not args.out:
            raise ConfigurationError("train needs --out DIR")

        manifest = Path(cfg.train.manifest)
        records = load_manifest(manifest)
        out_dir = prepare_output_dir(args.out, args.force)
        result = Trainer(cfg, records, manifest.parent).fit(out_dir)

        if result.losses:
            print(f"Trained {result.steps} steps: loss {result.losses[0]:.4f} -> {result.losses[-1]:.4f}")
        print(f"Checkpoint: {result.checkpoint}")
        if result.ema_checkpoint is not None:
            print(f"EMA checkpoint: {result.ema_checkpoint}")
    except (KeyboardInterrupt, Exception) as e:
        exit_with_error(e)
