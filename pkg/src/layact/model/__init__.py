"""Layout transformer model."""

from .blocks import (
    FeedForward,
    NormParams,
    TransformerBlock,
    block_forward,
    block_init,
    cross_block_forward,
    norm,
    norm_init,
    stack_forward,
)
from .config import StltConfig
from .stlt import (
    CLASS_BOX,
    JointStltWeights,
    StltWeights,
    embed_object,
    init_joint_weights,
    init_stlt_weights,
    spatial_forward,
    stlt_forward,
    stlt_joint_forward,
    temporal_forward,
)

__all__ = [
    "CLASS_BOX",
    "FeedForward",
    "JointStltWeights",
    "NormParams",
    "StltConfig",
    "StltWeights",
    "TransformerBlock",
    "block_forward",
    "block_init",
    "cross_block_forward",
    "embed_object",
    "init_joint_weights",
    "init_stlt_weights",
    "norm",
    "norm_init",
    "spatial_forward",
    "stack_forward",
    "stlt_forward",
    "stlt_joint_forward",
    "temporal_forward",
]
