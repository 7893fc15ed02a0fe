"""Configuration management for maskface-utils"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

from maskface_utils.data.augment import AugConfig
from maskface_utils.data.sampler import SamplerConfig
from maskface_utils.evaluation.report import EvalConfig
from maskface_utils.exceptions import ConfigurationError
from maskface_utils.losses.margin import MarginConfig
from maskface_utils.nn.backbone import PRESETS, BackboneConfig, backbone_preset
from maskface_utils.nn.blocks import DropBlockConfig
from maskface_utils.optim.ema import EMAConfig
from maskface_utils.optim.schedule import ScheduleConfig
from maskface_utils.optim.sgd import SGDConfig

PathLike = Union[str, Path]

# Desk-scale schedule: 8 epochs with a 1-epoch restart cycle after the decay phase.
TOY_SCHEDULE = dict(decay_epochs=6.0, total_epochs=8.0, restart_len=1.0)

TRUE_VALUES = ("true", "yes", "1")
FALSE_VALUES = ("false", "no", "0")


@dataclass
class TrainConfig:
    """Training loop settings; ``seed`` drives initialization, sampling and augmentation."""

    batch_size: int = 64
    seed: int = 0
    manifest: Optional[str] = None
    log_every: int = 10

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError(f"train.batch_size must be at least 1, got {self.batch_size}")
        if self.seed < 0:
            raise ConfigurationError(f"train.seed must be non-negative, got {self.seed}")
        if self.log_every < 1:
            raise ConfigurationError(f"train.log_every must be at least 1, got {self.log_every}")


@dataclass
class RunConfig:
    """All sections of one run, with defaults applied."""

    backbone_preset: str = "toy"
    backbone: BackboneConfig = field(default_factory=lambda: backbone_preset("toy"))
    loss: MarginConfig = field(default_factory=MarginConfig)
    sgd: SGDConfig = field(default_factory=SGDConfig)
    schedule: ScheduleConfig = field(default_factory=lambda: ScheduleConfig(**TOY_SCHEDULE))
    ema: EMAConfig = field(default_factory=EMAConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    aug: AugConfig = field(default_factory=AugConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    @classmethod
    def from_file(cls, path: PathLike) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}")
        return cls.from_text(path.read_text(encoding="utf-8"), source=str(path))

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        return build_config(parse_config_text(text, source))

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, train=replace(self.train, seed=seed))

    def sampler_config(self) -> SamplerConfig:
        """Sampler settings seeded from ``train.seed``."""
        return replace(self.sampler, seed=self.train.seed)

    def to_text(self) -> str:
        """Every resolved key, one per line, in a form ``from_text`` reads back unchanged."""
        lines = ["# resolved maskface run configuration"]
        section = None
        for key, value in self.items():
            current = key.split(".", 1)[0]
            if current != section:
                lines.append("")
                section = current
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def save(self, path: PathLike) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    def items(self) -> List[Tuple[str, str]]:
        b, s = self.backbone, self.schedule
        return [
            ("backbone.preset", self.backbone_preset),
            ("backbone.stem", b.stem),
            ("backbone.stem_channels", _fmt(b.stem_channels)),
            ("backbone.widths", _fmt(b.widths)),
            ("backbone.blocks", _fmt(b.blocks)),
            ("backbone.strides", _fmt(b.strides)),
            ("backbone.se_enabled", _fmt(b.se_enabled)),
            ("backbone.se_reduction", _fmt(b.se_reduction)),
            ("backbone.dropblock_stages", _fmt(sorted(b.dropblock_stages))),
            ("backbone.embedding_dim", _fmt(b.embedding_dim)),
            ("backbone.input_size", _fmt(b.input_size)),
            ("dropblock.drop_prob", _fmt(b.dropblock.drop_prob)),
            ("dropblock.block_size", _fmt(b.dropblock.block_size)),
            ("loss.family", self.loss.family),
            ("loss.scale", _fmt(self.loss.s)),
            ("loss.margin", _fmt(self.loss.m)),
            ("optim.base_lr", _fmt(s.base_lr)),
            ("optim.momentum", _fmt(self.sgd.momentum)),
            ("optim.weight_decay", _fmt(self.sgd.weight_decay)),
            ("optim.decay_norm_params", _fmt(self.sgd.decay_norm_params)),
            ("optim.warmup_epochs", _fmt(s.warmup_epochs)),
            ("optim.decay_epochs", _fmt(s.decay_epochs)),
            ("optim.total_epochs", _fmt(s.total_epochs)),
            ("optim.lr_min", _fmt(s.lr_min)),
            ("optim.restart_policy", s.restart_policy),
            ("optim.restart_peak", _fmt(s.restart_peak)),
            ("optim.restart_len", _fmt(s.restart_len)),
            ("ema.enabled", _fmt(self.ema.enabled)),
            ("ema.decay", _fmt(self.ema.decay)),
            ("ema.warmup", _fmt(self.ema.warmup)),
            ("sampler.mask_ratio_cap", _fmt(self.sampler.mask_ratio_cap)),
            ("sampler.shuffle", _fmt(self.sampler.shuffle)),
        ] + [
            (f"aug.{name}", _fmt(getattr(self.aug, name))) for name in AUG_KEYS
        ] + [
            ("train.batch_size", _fmt(self.train.batch_size)),
            ("train.seed", _fmt(self.train.seed)),
            ("train.manifest", _fmt(self.train.manifest)),
            ("train.log_every", _fmt(self.train.log_every)),
            ("eval.far_targets", _fmt(self.eval.far_targets)),
            ("eval.operating_far", _fmt(self.eval.operating_far)),
            ("eval.convention", self.eval.convention),
            ("eval.masked_weight", _fmt(self.eval.masked_weight)),
        ]


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in TRUE_VALUES:
        return True
    if lowered in FALSE_VALUES:
        return False
    raise ValueError(f"expected one of {TRUE_VALUES + FALSE_VALUES}, got {text!r}")


def _optional(parse: Callable[[str], object]) -> Callable[[str], object]:
    return lambda text: None if text.lower() == "none" else parse(text)


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


AUG_KEYS = [
    "p_hflip", "p_blur", "p_gaussian_blur", "p_motion_blur", "p_rgb_shift", "rgb_shift_limit",
    "p_compress", "p_brightness_contrast", "p_noise", "noise_sigma", "crop_padding",
]

# key -> parser for its value text
SCHEMA: Dict[str, Callable[[str], object]] = {
    "backbone.preset": str,
    "backbone.stem": str,
    "backbone.stem_channels": int,
    "backbone.widths": _int_list,
    "backbone.blocks": _int_list,
    "backbone.strides": _int_list,
    "backbone.se_enabled": parse_bool,
    "backbone.se_reduction": int,
    "backbone.dropblock_stages": _int_list,
    "backbone.embedding_dim": int,
    "backbone.input_size": int,
    "dropblock.drop_prob": float,
    "dropblock.block_size": int,
    "loss.family": str,
    "loss.scale": float,
    "loss.margin": _optional(float),
    "optim.base_lr": float,
    "optim.momentum": float,
    "optim.weight_decay": float,
    "optim.decay_norm_params": parse_bool,
    "optim.warmup_epochs": float,
    "optim.decay_epochs": float,
    "optim.total_epochs": float,
    "optim.lr_min": float,
    "optim.restart_policy": str,
    "optim.restart_peak": _optional(float),
    "optim.restart_len": float,
    "ema.enabled": parse_bool,
    "ema.decay": float,
    "ema.warmup": parse_bool,
    "sampler.mask_ratio_cap": float,
    "sampler.shuffle": parse_bool,
    "train.batch_size": int,
    "train.seed": int,
    "train.manifest": _optional(str),
    "train.log_every": int,
    "eval.far_targets": _float_list,
    "eval.operating_far": float,
    "eval.convention": str,
    "eval.masked_weight": float,
}
AUG_INT_KEYS = ("rgb_shift_limit", "crop_padding")
SCHEMA.update({f"aug.{name}": int if name in AUG_INT_KEYS else float for name in AUG_KEYS})


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, object]:
    """
    Parse ``section.key = value`` lines into typed values.

    Args:
        text: Config file contents; ``#`` starts a comment
        source: Name used in error messages

    Returns:
        Mapping of dotted keys to parsed values, only for keys present in the text

    Raises:
        ConfigurationError: Malformed line, unknown or repeated key, or unparsable value,
            reported with its line number
    """
    values: Dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{line_no}: expected 'section.key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigurationError(f"{source}:{line_no}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"{source}:{line_no}: key {key!r} given twice")
        try:
            values[key] = SCHEMA[key](value)
        except ValueError as e:
            raise ConfigurationError(f"{source}:{line_no}: bad value for {key}: {e}") from e
    return values


def _section(values: Dict[str, object], prefix: str, rename: Optional[Dict[str, str]] = None) -> Dict[str, object]:
    rename = rename or {}
    out = {}
    for key, value in values.items():
        section, name = key.split(".", 1)
        if section == prefix:
            out[rename.get(name, name)] = value
    return out


def build_config(values: Dict[str, object]) -> RunConfig:
    """Apply parsed values on top of the defaults; dataclass validation runs for every section."""
    backbone_values = _section(values, "backbone")
    preset = backbone_values.pop("preset", "toy")
    if preset not in PRESETS:
        raise ConfigurationError(f"Unknown backbone preset {preset!r}; choose from {sorted(PRESETS)}")
    backbone = backbone_preset(preset, dropblock=DropBlockConfig(**_section(values, "dropblock")),
                               **backbone_values)

    optim_values = _section(values, "optim")
    sgd_values = {k: optim_values.pop(k) for k in ("momentum", "weight_decay", "decay_norm_params")
                  if k in optim_values}
    schedule = ScheduleConfig(**{**TOY_SCHEDULE, **optim_values})

    return RunConfig(
        backbone_preset=preset,
        backbone=backbone,
        loss=MarginConfig(**_section(values, "loss", {"scale": "s", "margin": "m"})),
        sgd=SGDConfig(**sgd_values),
        schedule=schedule,
        ema=EMAConfig(**_section(values, "ema")),
        sampler=SamplerConfig(**_section(values, "sampler")),
        aug=AugConfig(**_section(values, "aug")),
        train=TrainConfig(**_section(values, "train")),
        eval=EvalConfig(**_section(values, "eval")),
    )


def load_config(path: Optional[PathLike] = None, seed: Optional[int] = None) -> RunConfig:
    """Defaults, then the config file if given, then the ``--seed`` override."""
    cfg = RunConfig.from_file(path) if path is not None else RunConfig()
    return cfg.with_seed(seed) if seed is not None else cfg
