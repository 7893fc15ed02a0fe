"""Network modules: layers, stem units, DropBlock, SE and residual blocks, backbone."""

from maskface_utils.nn.backbone import (
    EMBEDDING_DIM,
    PRESETS,
    Backbone,
    BackboneConfig,
    backbone_preset,
)
from maskface_utils.nn.base import Module
from maskface_utils.nn.blocks import (
    ConvBNPReLU,
    DropBlockConfig,
    PlainStem,
    ResidualBlock,
    SEBlock,
    StemUnit,
    dropblock_forward,
)
from maskface_utils.nn.layers import BatchNorm, Conv2d, Linear, PReLU

__all__ = [
    "Module",
    "Conv2d",
    "BatchNorm",
    "PReLU",
    "Linear",
    "ConvBNPReLU",
    "StemUnit",
    "PlainStem",
    "DropBlockConfig",
    "dropblock_forward",
    "SEBlock",
    "ResidualBlock",
    "Backbone",
    "BackboneConfig",
    "backbone_preset",
    "PRESETS",
    "EMBEDDING_DIM",
]
