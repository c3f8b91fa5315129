"""Procedural layout-action benchmark: scripts, styles, splits, rendering."""

from .generate import (
    SplitPlan,
    SplitSpec,
    SyntheticVideoSpec,
    corrupt_layout_categories,
    generate_multi_label_video,
    generate_video,
    make_split,
    materialize,
    synthetic_labels,
    synthetic_vocabulary,
)
from .render import FramesArchive, rasterize_frame, render_video, write_frames_archive
from .scripts import ACTION_NAMES, ACTION_SCRIPTS, ActionScript
from .styles import SHAPES, ObjectStyle, make_style_pool

__all__ = [
    "ACTION_NAMES",
    "ACTION_SCRIPTS",
    "ActionScript",
    "FramesArchive",
    "ObjectStyle",
    "SHAPES",
    "SplitPlan",
    "SplitSpec",
    "SyntheticVideoSpec",
    "corrupt_layout_categories",
    "generate_multi_label_video",
    "generate_video",
    "make_split",
    "make_style_pool",
    "materialize",
    "rasterize_frame",
    "render_video",
    "synthetic_labels",
    "synthetic_vocabulary",
    "write_frames_archive",
]
