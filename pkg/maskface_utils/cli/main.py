#!/usr/bin/env python3
"""
Main CLI entry point for maskface-utils

Provides a unified interface with subcommands for data generation, training,
embedding extraction and evaluation.
"""

import argparse
import sys
from typing import List, Optional

from maskface_utils.__version__ import __version__


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Flags accepted both before and after the subcommand name."""
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument(
        "--config",
        metavar="PATH",
        default=default,
        help="Run configuration file with 'section.key = value' lines (default: built-in toy settings)",
    )
    parser.add_argument(
        "--seed",
        type=int,
        metavar="N",
        default=default,
        help="Seed overriding train.seed (and the data seed for synth-data)",
    )
    parser.add_argument(
        "--out",
        metavar="PATH",
        default=default,
        help="Output directory (synth-data, train) or file (extract, eval report)",
    )
    parser.add_argument(
        "--force",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="Overwrite existing outputs",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskface",
        description="Masked face recognition training recipe at desk scale",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
exit codes:
  0  success
  1  invalid input, configuration or file contents
  2  runtime failure (diverged training, undefined metric, ...)

examples:
  # Generate the 16-identity toy dataset
  maskface synth-data --out toy_data --seed 0

  # Train with the default toy configuration
  maskface train --manifest toy_data/train.csv --out runs/toy

  # Extract EMA embeddings for the held-out images and evaluate them
  maskface extract --checkpoint runs/toy/checkpoint.mfrw --use-ema \\
      --manifest toy_data/holdout.csv --out runs/toy/holdout.emb
  maskface eval --embeddings runs/toy/holdout.emb --pairs toy_data/pairs.csv

for more help on a specific command:
  maskface train --help
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Synthetic data
    synth_parser = subparsers.add_parser(
        "synth-data",
        help="Generate a deterministic synthetic face dataset with masked variants",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
outputs (in --out):
  images/        PPM images
  train.csv      training manifest
  holdout.csv    held-out images for evaluation
  pairs.csv      all held-out pairs with identity and mask flags
        """,
    )
    _global_flags(synth_parser, suppress=True)
    synth_parser.add_argument("--identities", type=int, default=16, metavar="N",
                              help="Number of identities (default: 16)")
    synth_parser.add_argument("--images-per-identity", type=int, default=20, metavar="N",
                              help="Training images per identity (default: 20)")
    synth_parser.add_argument("--masked-fraction", type=float, default=0.3, metavar="FLOAT",
                              help="Fraction of training images given a mask overlay (default: 0.3)")
    synth_parser.add_argument("--holdout-per-identity", type=int, default=4, metavar="N",
                              help="Held-out images per identity, half of them masked (default: 4)")

    # Train
    train_parser = subparsers.add_parser(
        "train",
        help="Train a backbone and margin head on a manifest",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
outputs (in --out):
  checkpoint.mfrw       final weights
  checkpoint_ema.mfrw   EMA weights (when ema.enabled)
  train_log.csv         epoch, step, lr, loss, masked_fraction, batch_size per step
  config.resolved       every configuration key, reusable with --config
        """,
    )
    _global_flags(train_parser, suppress=True)
    train_parser.add_argument("--manifest", metavar="CSV",
                              help="Training manifest (default: train.manifest from the config)")

    # Extract
    extract_parser = subparsers.add_parser(
        "extract",
        help="Write an embedding set for a manifest, or concatenate two sets",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
examples:
  maskface extract --checkpoint runs/a/checkpoint.mfrw --manifest data/holdout.csv --out a.emb
  maskface extract --concat a.emb b.emb --out ab.emb
        """,
    )
    _global_flags(extract_parser, suppress=True)
    extract_parser.add_argument("--checkpoint", metavar="MFRW", help="Weights written by train")
    extract_parser.add_argument("--manifest", metavar="CSV", help="Images to embed")
    extract_parser.add_argument("--use-ema", action="store_true",
                                help="Load the EMA weights stored next to --checkpoint")
    extract_parser.add_argument("--concat", nargs=2, metavar=("A", "B"),
                                help="Concatenate two embedding files instead of extracting")
    extract_parser.add_argument("--batch-size", type=int, default=64, metavar="N",
                                help="Images per forward pass (default: 64)")

    # Evaluate
    eval_parser = subparsers.add_parser(
        "eval",
        help="Verification (TAR@FAR) and identification metrics for an embedding set",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _global_flags(eval_parser, suppress=True)
    eval_parser.add_argument("--embeddings", required=True, metavar="EMB", help="Embedding set to evaluate")
    eval_parser.add_argument("--pairs", required=True, metavar="CSV", help="Pair list")
    eval_parser.add_argument("--far-targets", metavar="LIST",
                             help="Comma-separated FAR targets (default: eval.far_targets)")
    eval_parser.add_argument("--gallery", metavar="EMB",
                             help="Gallery embedding set; enables top-1 identification of --embeddings")
    eval_parser.add_argument("--identities", nargs="+", metavar="CSV",
                             help="Manifests mapping image paths to identities (needed with --gallery)")

    return parser


def main(argv: Optional[List[str]] = None):
    """Main CLI entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Handle no command
    if not args.command:
        parser.print_help()
        sys.exit(1)

    # Route to appropriate handler
    if args.command == "synth-data":
        from maskface_utils.cli.synth_data import synth_data
        synth_data(args)

    elif args.command == "train":
        from maskface_utils.cli.train import train
        train(args)

    elif args.command == "extract":
        from maskface_utils.cli.extract import extract
        extract(args)

    elif args.command == "eval":
        from maskface_utils.cli.evaluate import evaluate
        evaluate(args)


if __name__ == "__main__":
    main()
