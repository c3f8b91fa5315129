"""Appearance branch and layout/appearance fusion schemes."""

from .appearance import (
    AppearanceWeights,
    appearance_forward,
    frame_maps,
    frame_vectors,
    frames_to_input,
    init_appearance_weights,
    pooled_tokens,
    video_trunk,
)
from .config import FUSION_SCHEMES, AppearanceConfig, FusionConfig
from .roi import roi_align, roi_align_many, roi_weights
from .schemes import (
    FusionWeights,
    cacnf_loss,
    fuse_caf,
    fuse_ef,
    fuse_lcf,
    fuse_pbf,
    fuse_pff,
    fuse_vatf,
    fusion_forward,
    init_fusion_weights,
)

__all__ = [
    "FUSION_SCHEMES",
    "AppearanceConfig",
    "AppearanceWeights",
    "FusionConfig",
    "FusionWeights",
    "appearance_forward",
    "cacnf_loss",
    "frame_maps",
    "frame_vectors",
    "frames_to_input",
    "fuse_caf",
    "fuse_ef",
    "fuse_lcf",
    "fuse_pbf",
    "fuse_pff",
    "fuse_vatf",
    "fusion_forward",
    "init_appearance_weights",
    "init_fusion_weights",
    "pooled_tokens",
    "roi_align",
    "roi_align_many",
    "roi_weights",
    "video_trunk",
]
