"""Metric report: TAR@FAR per pair group plus the weighted masked/standard composites."""

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from maskface_utils.data.manifest import PairRecord
from maskface_utils.evaluation.metrics import FarPoint, tar_at_far, weighted_mfr
from maskface_utils.exceptions import ConfigurationError, MetricError, ParameterError

PathLike = Union[str, Path]

CONVENTIONS = ("tar", "error")


@dataclass
class EvalConfig:
    """
    Evaluation settings.

    ``convention`` selects how composites are reported: ``tar`` uses TAR at the operating
    FAR, ``error`` uses 1 - TAR.
    """

    far_targets: List[float] = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    operating_far: float = 1e-4
    convention: str = "tar"
    masked_weight: float = 0.25

    def __post_init__(self):
        self.far_targets = [float(f) for f in self.far_targets]
        for f in self.far_targets + [self.operating_far]:
            if not 0 < f <= 1:
                raise ParameterError(f"FAR values must be in (0, 1], got {f}")
        if self.convention not in CONVENTIONS:
            raise ConfigurationError(f"eval.convention must be one of {CONVENTIONS}, got {self.convention!r}")
        if not 0 <= self.masked_weight <= 1:
            raise ParameterError(f"eval.masked_weight must be in [0, 1], got {self.masked_weight}")


@dataclass
class GroupMetrics:
    """TAR@FAR for one group of pairs."""

    name: str
    pair_count: int
    points: Dict[float, FarPoint] = field(default_factory=dict)

    def value_at(self, far: float, convention: str) -> float:
        tar = self.points[far].tar
        return tar if convention == "tar" else 1.0 - tar


@dataclass
class Composite:
    """Weighted masked/standard score for one pair population (all, or a named subset)."""

    name: str
    mfr_masked_old: float
    sfr_all: float
    mfr_weighted: float


@dataclass
class MetricReport:
    convention: str
    operating_far: float
    masked_weight: float
    groups: Dict[str, GroupMetrics] = field(default_factory=dict)
    composites: Dict[str, Composite] = field(default_factory=dict)
    top1: Optional[float] = None

    @property
    def tar_at_far(self) -> Dict[float, float]:
        all_pairs = self.groups.get("all")
        return {f: p.tar for f, p in all_pairs.points.items()} if all_pairs else {}

    @property
    def mfr_masked_old(self) -> Optional[float]:
        c = self.composites.get("all")
        return c.mfr_masked_old if c else None

    @property
    def sfr_all(self) -> Optional[float]:
        c = self.composites.get("all")
        return c.sfr_all if c else None

    @property
    def mfr_weighted(self) -> Optional[float]:
        c = self.composites.get("all")
        return c.mfr_weighted if c else None

    def to_dict(self) -> dict:
        return {
            "convention": self.convention,
            "operating_far": self.operating_far,
            "masked_weight": self.masked_weight,
            "groups": {
                name: {
                    "pairs": g.pair_count,
                    "tar_at_far": {
                        f"{f:g}": {"tar": p.tar, "threshold": p.threshold, "far": p.far}
                        for f, p in g.points.items()
                    },
                }
                for name, g in self.groups.items()
            },
            "composites": {
                name: {
                    "mfr_masked_old": c.mfr_masked_old,
                    "sfr_all": c.sfr_all,
                    "mfr_weighted": c.mfr_weighted,
                }
                for name, c in self.composites.items()
            },
            "top1": self.top1,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"Convention: {self.convention} (operating FAR {self.operating_far:g})"]
        for name, g in self.groups.items():
            lines.append(f"[{name}] {g.pair_count} pairs")
            for f, p in g.points.items():
                lines.append(f"  TAR@FAR={f:g}: {p.tar:.4f} (threshold {p.threshold:.6f})")
        for name, c in self.composites.items():
            w = self.masked_weight
            lines.append(
                f"[{name}] weighted = {w:g} * masked {c.mfr_masked_old:.4f} "
                f"+ {1 - w:g} * all {c.sfr_all:.4f} = {c.mfr_weighted:.4f}"
            )
        if self.top1 is not None:
            lines.append(f"Top-1 identification: {self.top1:.4f}")
        return "\n".join(lines)

    def save(self, path: PathLike) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def _group(name: str, scores: np.ndarray, labels: np.ndarray, fars: Sequence[float]) -> Optional[GroupMetrics]:
    try:
        points = tar_at_far(scores, labels, fars)
    except MetricError as e:
        print(f"Warning: skipping pair group '{name}': {e}", file=sys.stderr)
        return None
    return GroupMetrics(name=name, pair_count=int(scores.size), points=points)


def build_report(scores: np.ndarray, pairs: Sequence[PairRecord], cfg: EvalConfig) -> MetricReport:
    """
    Evaluate all pairs, masked pairs, unmasked pairs and every named subset, then combine
    masked and all-pairs results into the weighted composite per population.

    Raises:
        MetricError: If the all-pairs group itself is undefined
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size != len(pairs):
        raise ParameterError(f"{scores.size} scores for {len(pairs)} pairs")
    labels = np.array([p.same_identity for p in pairs], dtype=bool)
    masked = np.array([p.masked_pair for p in pairs], dtype=bool)
    subsets = np.array([p.subset or "" for p in pairs])
    fars = sorted(set(cfg.far_targets) | {cfg.operating_far}, reverse=True)

    report = MetricReport(convention=cfg.convention, operating_far=cfg.operating_far,
                          masked_weight=cfg.masked_weight)
    populations = [("all", np.ones(len(pairs), dtype=bool))]
    populations += [(name, subsets == name) for name in sorted(set(subsets) - {""})]
    for name, selected in populations:
        if name == "all" and not selected.any():
            raise MetricError("no pairs to evaluate")
        prefix = "" if name == "all" else f"{name}/"
        for group_name, group_sel in (
            (name, selected),
            (f"{prefix}masked", selected & masked),
            (f"{prefix}unmasked", selected & ~masked),
        ):
            if not group_sel.any():
                continue
            group = _group(group_name, scores[group_sel], labels[group_sel], fars)
            if group is None and group_name == "all":
                raise MetricError("TAR@FAR is undefined on the full pair list")
            if group is not None:
                report.groups[group_name] = group

        whole = report.groups.get(name)
        masked_group = report.groups.get(f"{prefix}masked")
        if whole is not None and masked_group is not None:
            old = masked_group.value_at(cfg.operating_far, cfg.convention)
            sfr = whole.value_at(cfg.operating_far, cfg.convention)
            report.composites[name] = Composite(
                name=name,
                mfr_masked_old=old,
                sfr_all=sfr,
                mfr_weighted=weighted_mfr(old, sfr, cfg.masked_weight),
            )
    return report
