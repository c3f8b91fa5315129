"""Core data model for spatio-temporal layouts.

A video is an ordered sequence of frames; each frame holds an unordered set
of objects; each object is a category index plus a unit-normalized bounding
box (and, for detector output, a confidence score). This is the layout
branch's entire input: boxes and category labels, no pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in unit-normalized coordinates, corners ordered."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (0.0 <= self.x1 <= self.x2 <= 1.0 and 0.0 <= self.y1 <= self.y2 <= 1.0):
            raise DataError(
                f"malformed box ({self.x1}, {self.y1}, {self.x2}, {self.y2}): "
                "need 0 <= x1 <= x2 <= 1 and 0 <= y1 <= y2 <= 1"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.x2, self.y2])

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains_point(self, x: float, y: float) -> bool:
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2

    def intersects(self, other: "BoundingBox") -> bool:
        return not (
            self.x2 <= other.x1
            or other.x2 <= self.x1
            or self.y2 <= other.y1
            or other.y2 <= self.y1
        )


FULL_FRAME_BOX = BoundingBox(0.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class ObjectInstance:
    category: int
    box: BoundingBox
    score: float | None = None

    def __post_init__(self):
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise DataError(f"detector score {self.score} outside [0, 1]")


@dataclass
class FrameLayout:
    """Objects visible in one frame; list order carries no meaning."""

    objects: list[ObjectInstance] = field(default_factory=list)


@dataclass
class VideoLayout:
    """Time-ordered frames plus a label (class index or multi-hot vector)."""

    frames: list[FrameLayout]
    label: int | np.ndarray | None
    id: str

    def __post_init__(self):
        if len(self.frames) < 1:
            raise DataError(f"video {self.id!r} has no frames")


def videos_equal(a: VideoLayout, b: VideoLayout) -> bool:
    if a.id != b.id or len(a.frames) != len(b.frames):
        return False
    la, lb = a.label, b.label
    if isinstance(la, np.ndarray) != isinstance(lb, np.ndarray):
        return False
    if isinstance(la, np.ndarray):
        if not np.array_equal(la, lb):
            return False
    elif la != lb:
        return False
    for fa, fb in zip(a.frames, b.frames):
        if len(fa.objects) != len(fb.objects):
            return False
        for oa, ob in zip(fa.objects, fb.objects):
            if oa != ob:
                return False
    return True


class Vocabulary:
    """Object-category vocabulary with two reserved slots.

    Index 0 is the special class-token category, index 1 the padding
    category; real categories start at index 2.
    """

    CLASS_TOKEN = 0
    PADDING = 1
    RESERVED = ("<class>", "<pad>")

    def __init__(self, category_names: list[str], generic_name: str = "object"):
        if len(set(category_names)) != len(category_names):
            raise ConfigError("vocabulary names must be unique")
        for r in self.RESERVED:
            if r in category_names:
                raise ConfigError(f"{r!r} is reserved and cannot be a category name")
        self.names: list[str] = list(self.RESERVED) + list(category_names)
        self._index = {n: i for i, n in enumerate(self.names)}
        self.generic_name = generic_name

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DataError(f"unknown category {name!r}") from None

    def name(self, idx: int) -> str:
        if not 0 <= idx < len(self.names):
            raise DataError(f"category index {idx} out of range")
        return self.names[idx]

    @property
    def generic_index(self) -> int:
        """Fallback category for lenient parsing; requires the generic name."""
        if self.generic_name not in self._index:
            raise ConfigError(
                f"vocabulary has no generic {self.generic_name!r} category"
            )
        return self._index[self.generic_name]

    @property
    def category_names(self) -> list[str]:
        return self.names[len(self.RESERVED):]


class LabelSpace:
    """Ordered action names plus the task mode (single- or multi-label)."""

    def __init__(self, action_names: list[str], multi_label: bool = False):
        if len(set(action_names)) != len(action_names):
            raise ConfigError("action names must be unique")
        self.names = list(action_names)
        self._index = {n: i for i, n in enumerate(self.names)}
        self.multi_label = multi_label

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DataError(f"unknown action {name!r}") from None

    def name(self, idx: int) -> str:
        if not 0 <= idx < len(self.names):
            raise DataError(f"action index {idx} out of range")
        return self.names[idx]

    def multi_hot(self, names_or_indices) -> np.ndarray:
        v = np.zeros(len(self.names))
        for x in names_or_indices:
            idx = x if isinstance(x, (int, np.integer)) else self.index(x)
            if not 0 <= idx < len(self.names):
                raise DataError(f"action index {idx} out of range")
            v[int(idx)] = 1.0
        return v
