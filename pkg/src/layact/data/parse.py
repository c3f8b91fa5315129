"""JSON-lines annotation ingestion and canonical serialization.

Input schema, one video per line:

    {"id": str,
     "label": str or [str],                  (action name(s); indices accepted)
     "frames": [{"objects": [{"category": str or int,
                              "box": [x1, y1, x2, y2],     (pixels)
                              "score": float, optional}]}],
     "width": int, "height": int}

The canonical serialized form uses resolved integer indices and normalized
boxes with width = height = 1, so parse(serialize(parse(x))) == parse(x).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError
from .types import (
    BoundingBox,
    FrameLayout,
    LabelSpace,
    ObjectInstance,
    VideoLayout,
    Vocabulary,
)


@dataclass
class ParseStats:
    """Tallies from a parse pass (lenient-mode warnings, score filtering)."""

    videos: int = 0
    objects: int = 0
    unknown_categories: int = 0
    unknown_category_names: dict = field(default_factory=dict)
    dropped_by_score: int = 0


def normalize_box(pixel_box, frame_width: float, frame_height: float) -> BoundingBox:
    """Divide pixel coordinates by the frame size and clamp into [0, 1].

    Coordinates may overshoot the frame by at most one pixel (clamping
    tolerance); a box inverted after normalization is an error.
    """
    if frame_width <= 0 or frame_height <= 0:
        raise ConfigError(f"frame size {frame_width}x{frame_height} must be positive")
    x1, y1, x2, y2 = (float(c) for c in pixel_box)
    for v, limit in ((x1, frame_width), (x2, frame_width), (y1, frame_height), (y2, frame_height)):
        if v < -1.0 or v > limit + 1.0:
            raise DataError(
                f"pixel coordinate {v} outside frame 0..{limit} (+/- 1 px tolerance)"
            )
    nx1 = min(max(x1 / frame_width, 0.0), 1.0)
    nx2 = min(max(x2 / frame_width, 0.0), 1.0)
    ny1 = min(max(y1 / frame_height, 0.0), 1.0)
    ny2 = min(max(y2 / frame_height, 0.0), 1.0)
    if nx2 < nx1 or ny2 < ny1:
        raise DataError(f"malformed box {pixel_box}: corners inverted")
    return BoundingBox(nx1, ny1, nx2, ny2)


def _require(record: dict, key: str, line_no: int):
    if key not in record:
        raise DataError(f"line {line_no}: missing field {key!r}")
    return record[key]


def _resolve_category(
    raw, vocab: Vocabulary, strict: bool, stats: ParseStats, line_no: int
) -> int:
    if isinstance(raw, bool):
        raise DataError(f"line {line_no}: category must be a name or index")
    if isinstance(raw, int):
        if not 0 <= raw < len(vocab):
            raise DataError(f"line {line_no}: category index {raw} out of range")
        return raw
    if not isinstance(raw, str):
        raise DataError(f"line {line_no}: category must be a name or index")
    if raw in vocab:
        return vocab.index(raw)
    if strict:
        raise DataError(f"line {line_no}: unknown category {raw!r}")
    stats.unknown_categories += 1
    stats.unknown_category_names[raw] = stats.unknown_category_names.get(raw, 0) + 1
    return vocab.generic_index


def _resolve_label(raw, labels: LabelSpace, line_no: int):
    def one(x):
        if isinstance(x, bool) or not isinstance(x, (int, str)):
            raise DataError(f"line {line_no}: label must be a name or index")
        if isinstance(x, int):
            if not 0 <= x < len(labels):
                raise DataError(f"line {line_no}: label index {x} out of range")
            return x
        return labels.index(x)

    if labels.multi_label:
        if not isinstance(raw, list):
            raise DataError(f"line {line_no}: multi-label task expects a label list")
        return labels.multi_hot([one(x) for x in raw])
    if isinstance(raw, list):
        raise DataError(f"line {line_no}: single-label task expects one label")
    return one(raw)


def parse_annotations(
    source,
    vocab: Vocabulary,
    labels: LabelSpace,
    strict: bool = True,
    score_threshold: float | None = None,
) -> tuple[list[VideoLayout], ParseStats]:
    """Parse JSON-lines annotations into VideoLayouts.

    `source` is a str, bytes, or an iterable of lines. `score_threshold`
    drops objects whose detector score falls below it (oracle ingestion
    passes None and keeps every box; objects without scores are kept).
    In lenient mode unknown categories map to the generic object category
    and are tallied in the returned stats.
    """
    if isinstance(source, bytes):
        source = source.decode()
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [ln.decode() if isinstance(ln, bytes) else ln for ln in source]
    stats = ParseStats()
    videos: list[VideoLayout] = []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {line_no}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise DataError(f"line {line_no}: expected a JSON object")
        vid = _require(record, "id", line_no)
        raw_label = _require(record, "label", line_no)
        raw_frames = _require(record, "frames", line_no)
        width = _require(record, "width", line_no)
        height = _require(record, "height", line_no)
        if not isinstance(raw_frames, list) or not raw_frames:
            raise DataError(f"line {line_no}: 'frames' must be a non-empty list")
        label = _resolve_label(raw_label, labels, line_no)
        frames = []
        for fi, rf in enumerate(raw_frames):
            if not isinstance(rf, dict) or "objects" not in rf:
                raise DataError(f"line {line_no}: frame {fi} missing 'objects'")
            objs = []
            for ro in rf["objects"]:
                if not isinstance(ro, dict):
                    raise DataError(f"line {line_no}: object entries must be objects")
                if "category" not in ro or "box" not in ro:
                    raise DataError(
                        f"line {line_no}: object missing 'category' or 'box'"
                    )
                cat = _resolve_category(ro["category"], vocab, strict, stats, line_no)
                box_raw = ro["box"]
                if not isinstance(box_raw, list) or len(box_raw) != 4:
                    raise DataError(f"line {line_no}: box must be [x1, y1, x2, y2]")
                try:
                    box = normalize_box(box_raw, width, height)
                except DataError as exc:
                    raise DataError(f"line {line_no}: {exc}") from None
                score = ro.get("score")
                if score is not None:
                    score = float(score)
                if (
                    score_threshold is not None
                    and score is not None
                    and score < score_threshold
                ):
                    stats.dropped_by_score += 1
                    continue
                objs.append(ObjectInstance(category=cat, box=box, score=score))
                stats.objects += 1
            frames.append(FrameLayout(objects=objs))
        videos.append(VideoLayout(frames=frames, label=label, id=str(vid)))
        stats.videos += 1
    return videos, stats


def serialize_annotations(videos: list[VideoLayout]) -> str:
    """Canonical JSON-lines form: indices resolved, boxes normalized."""
    out_lines = []
    for v in videos:
        if isinstance(v.label, np.ndarray):
            label = [int(i) for i in np.flatnonzero(v.label)]
        else:
            label = int(v.label)
        rec = {
            "id": v.id,
            "label": label,
            "frames": [
                {
                    "objects": [
                        {
                            "category": int(o.category),
                            "box": [o.box.x1, o.box.y1, o.box.x2, o.box.y2],
                            **({"score": o.score} if o.score is not None else {}),
                        }
                        for o in f.objects
                    ]
                }
                for f in v.frames
            ],
            "width": 1,
            "height": 1,
        }
        out_lines.append(json.dumps(rec))
    return "\n".join(out_lines) + ("\n" if out_lines else "")
