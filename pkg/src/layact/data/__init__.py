"""Layout data model, annotation parsing, sampling, and padding."""

from .parse import ParseStats, normalize_box, parse_annotations, serialize_annotations
from .sampling import collate_videos, pad_objects, sample_frame_indices, sample_frames
from .types import (
    FULL_FRAME_BOX,
    BoundingBox,
    FrameLayout,
    LabelSpace,
    ObjectInstance,
    VideoLayout,
    Vocabulary,
    videos_equal,
)

__all__ = [
    "FULL_FRAME_BOX",
    "BoundingBox",
    "FrameLayout",
    "LabelSpace",
    "ObjectInstance",
    "ParseStats",
    "VideoLayout",
    "Vocabulary",
    "collate_videos",
    "normalize_box",
    "pad_objects",
    "parse_annotations",
    "sample_frame_indices",
    "sample_frames",
    "serialize_annotations",
    "videos_equal",
]
