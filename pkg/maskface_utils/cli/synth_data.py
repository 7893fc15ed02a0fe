#!/usr/bin/env python3
"""
CLI handler for synthetic dataset generation
"""

import sys

from maskface_utils.cli import exit_with_error, prepare_output_dir
from maskface_utils.data.synth import SynthConfig, generate_dataset
from maskface_utils.exceptions import ConfigurationError


def synth_data(args):
    """Handle synth-data from CLI args"""
    try:
        if not args.out:
            raise ConfigurationError("synth-data needs --out DIR")
        out_dir = prepare_output_dir(args.out, args.force)
        cfg = SynthConfig(
            num_identities=args.identities,
            images_per_identity=args.images_per_identity,
            masked_fraction=args.masked_fraction,
            holdout_per_identity=args.holdout_per_identity,
            seed=args.seed if args.seed is not None else 0,
        )
        summary = generate_dataset(out_dir, cfg)
        masked = sum(r.masked for r in summary.train)
        print(
            f"Wrote {len(summary.train)} training records ({masked} masked), "
            f"{len(summary.holdout)} held-out records and {len(summary.pairs)} pairs to '{out_dir}'"
        )
    except (KeyboardInterrupt, Exception) as e:
        exit_with_error(e)
