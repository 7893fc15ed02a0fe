"""Training loop: sampler plan, augmentation, alignment, margin loss, SGD and EMA."""

import csv
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from maskface_utils.config import RunConfig
from maskface_utils.core.preprocess import batch_bounds, to_input, training_view
from maskface_utils.data.imageio import read_image
from maskface_utils.data.manifest import ManifestRecord, num_identities, resolve_image_path
from maskface_utils.data.sampler import EpochPlan, plan_epoch
from maskface_utils.exceptions import ManifestValidationError, NumericalError, TrainingDivergedError
from maskface_utils.losses.margin import MarginHead
from maskface_utils.nn.backbone import Backbone
from maskface_utils.optim.ema import ModelEMA
from maskface_utils.optim.schedule import ScheduleConfig, lr_at
from maskface_utils.optim.sgd import SGD
from maskface_utils.tensor.checkpoint import save_weights
from maskface_utils.tensor.engine import Tape, backward

PathLike = Union[str, Path]

LOG_COLUMNS = ["epoch", "step", "lr", "loss", "masked_fraction", "batch_size"]
CHECKPOINT_NAME = "checkpoint.mfrw"
EMA_CHECKPOINT_NAME = "checkpoint_ema.mfrw"
RESOLVED_CONFIG_NAME = "config.resolved"
LOG_NAME = "train_log.csv"


@dataclass
class TrainResult:
    steps: int
    losses: List[float] = field(default_factory=list)
    lrs: List[float] = field(default_factory=list)
    masked_fractions: List[float] = field(default_factory=list)
    checkpoint: Optional[Path] = None
    ema_checkpoint: Optional[Path] = None
    log_path: Optional[Path] = None


def ema_checkpoint_path(checkpoint: PathLike) -> Path:
    """checkpoint.mfrw -> checkpoint_ema.mfrw"""
    path = Path(checkpoint)
    return path.with_name(f"{path.stem}_ema{path.suffix}")


class Trainer:
    """Trains a backbone plus margin head on one manifest and writes a run directory."""

    def __init__(self, cfg: RunConfig, records: Sequence[ManifestRecord], base_dir: PathLike):
        """
        Initialize trainer.

        Args:
            cfg: Resolved run configuration
            records: Training manifest records
            base_dir: Directory image paths in the manifest are relative to
        """
        if not records:
            raise ManifestValidationError("training manifest has no records")
        self.cfg = cfg
        self.records = list(records)
        self.base_dir = Path(base_dir)
        seed = cfg.train.seed

        self.sampler_cfg = cfg.sampler_config()
        self.steps_per_epoch = math.ceil(len(plan_epoch(self.records, self.sampler_cfg, 0)) / cfg.train.batch_size)
        self.schedule: ScheduleConfig = replace(cfg.schedule, steps_per_epoch=self.steps_per_epoch)

        self.model = Backbone(cfg.backbone, seed=seed)
        loss_cfg = replace(cfg.loss, class_count=num_identities(self.records))
        self.head = MarginHead(loss_cfg, cfg.backbone.embedding_dim, rng=np.random.default_rng([seed, 2]))
        self.optimizer = SGD(self.model.parameters() + self.head.parameters(), cfg.sgd)
        self.ema = ModelEMA(self.model, cfg.ema) if cfg.ema.enabled else None
        self._images: Dict[int, np.ndarray] = {}

    def _image(self, index: int) -> np.ndarray:
        if index not in self._images:
            path = resolve_image_path(self.records[index].image_path, self.base_dir)
            self._images[index] = read_image(path)
        return self._images[index]

    def _batch(self, plan: EpochPlan, epoch: int, start: int, stop: int):
        views, labels = [], []
        size = self.cfg.backbone.input_size
        for pos in range(start, stop):
            index = plan.indices[pos]
            record = self.records[index]
            rng = np.random.default_rng([self.cfg.train.seed, epoch, pos])
            views.append(training_view(self._image(index), record.landmark_array(), self.cfg.aug, rng, size))
            labels.append(record.identity)
        return to_input(views), np.array(labels, dtype=np.int64)

    def train_step(self, images, labels, step: int, history: Sequence[float]) -> float:
        """Forward, backward and one optimizer update; returns the loss value."""
        lr = lr_at(step, self.schedule)
        self.model.train()
        self.model.set_dropblock_rng(np.random.default_rng([self.cfg.train.seed, 3, step]))
        try:
            with Tape() as tape:
                loss = self.head(self.model(images), labels)
            value = loss.item()
            if not math.isfinite(value):
                raise NumericalError("loss is not finite")
            backward(loss, tape)
        except NumericalError as e:
            raise TrainingDivergedError(step, lr, history, reason=str(e)) from e
        self.optimizer.step(lr)
        self.optimizer.zero_grad()
        if self.ema is not None:
            self.ema.update()
        return value

    def fit(self, out_dir: PathLike) -> TrainResult:
        """
        Run every epoch and write the log, checkpoints and resolved config into ``out_dir``.

        Raises:
            TrainingDivergedError: If the loss becomes non-finite
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.cfg.save(out_dir / RESOLVED_CONFIG_NAME)

        total = self.schedule.total_steps
        epochs = math.ceil(total / self.steps_per_epoch)
        result = TrainResult(steps=0, log_path=out_dir / LOG_NAME)
        print(
            f"Training {self.model.num_parameters():,} backbone parameters on {len(self.records)} records, "
            f"{self.steps_per_epoch} steps/epoch, {total} steps",
            file=sys.stderr,
        )

        with open(result.log_path, "w", newline="", encoding="utf-8") as log_file:
            writer = csv.writer(log_file, lineterminator="\n")
            writer.writerow(LOG_COLUMNS)
            step = 0
            for epoch in range(epochs):
                plan = plan_epoch(self.records, self.sampler_cfg, epoch)
                result.masked_fractions.append(plan.masked_fraction)
                epoch_losses = []
                for start, stop in batch_bounds(len(plan), self.cfg.train.batch_size):
                    if step >= total:
                        break
                    images, labels = self._batch(plan, epoch, start, stop)
                    lr = lr_at(step, self.schedule)
                    loss = self.train_step(images, labels, step, result.losses)
                    writer.writerow([epoch, step, repr(lr), repr(loss), repr(plan.masked_fraction), stop - start])
                    result.losses.append(loss)
                    result.lrs.append(lr)
                    epoch_losses.append(loss)
                    if step % self.cfg.train.log_every == 0:
                        print(f"  step {step}: lr {lr:.6f}, loss {loss:.4f}", file=sys.stderr)
                    step += 1
                if epoch_losses:
                    print(
                        f"Epoch {epoch + 1}/{epochs}: mean loss {np.mean(epoch_losses):.4f}, "
                        f"masked fraction {plan.masked_fraction:.3f} "
                        f"({plan.masked_count} masked / {len(plan)})",
                        file=sys.stderr,
                    )
            result.steps = step

        result.checkpoint = out_dir / CHECKPOINT_NAME
        save_weights(result.checkpoint, self.model.state_dict())
        if self.ema is not None:
            result.ema_checkpoint = ema_checkpoint_path(result.checkpoint)
            with self.ema.swapped():
                save_weights(result.ema_checkpoint, self.model.state_dict())
        print(f"Wrote {result.checkpoint}", file=sys.stderr)
        return result
