"""Frame sampling and object padding for fixed-size model input."""

from __future__ import annotations

import numpy as np

from ..engine.rng import RngStream
from ..errors import ConfigError, DataError
from .types import FrameLayout, VideoLayout, Vocabulary


def sample_frame_indices(total: int, n: int, mode: str, rng: RngStream | None = None) -> np.ndarray:
    """Nondecreasing frame indices of length n.

    random: n distinct sorted indices when enough frames exist, otherwise
    all frames followed by repeats of the last one. uniform: floor(i*T/n).
    """
    if n < 1:
        raise ConfigError("frame count must be >= 1")
    if total < 1:
        raise DataError("cannot sample frames from an empty video")
    if mode == "uniform":
        return (np.arange(n) * total) // n
    if mode == "random":
        if rng is None:
            raise ConfigError("random frame sampling requires an rng stream")
        if total >= n:
            idx = rng.choice(total, size=n, replace=False)
            return np.sort(idx)
        idx = np.arange(total)
        pad = np.full(n - total, total - 1)
        return np.concatenate([idx, pad])
    raise ConfigError(f"unknown sampling mode {mode!r}")


def sample_frames(video: VideoLayout, n: int, mode: str, rng: RngStream | None = None) -> VideoLayout:
    idx = sample_frame_indices(len(video.frames), n, mode, rng)
    return VideoLayout(
        frames=[video.frames[i] for i in idx], label=video.label, id=video.id
    )


def collate_videos(
    videos: list[VideoLayout],
    n: int,
    m_max: int,
    mode: str,
    rng: RngStream | None = None,
) -> dict:
    """Sample frames and pad objects into batch arrays.

    Returns categories [B, n, m_max], boxes [B, n, m_max, 4], validity mask
    [B, n, m_max], labels ([B] int or [B, C] multi-hot), and the sampled
    frame indices [B, n].
    """
    b = len(videos)
    cats = np.full((b, n, m_max), Vocabulary.PADDING, dtype=np.int64)
    boxes = np.zeros((b, n, m_max, 4))
    mask = np.zeros((b, n, m_max), dtype=bool)
    indices = np.zeros((b, n), dtype=np.int64)
    labels = []
    for i, v in enumerate(videos):
        sub = rng.child(v.id) if rng is not None else None
        idx = sample_frame_indices(len(v.frames), n, mode, sub)
        indices[i] = idx
        for j, fi in enumerate(idx):
            c, bx, mk = pad_objects(v.frames[fi], m_max)
            cats[i, j] = c
            boxes[i, j] = bx
            mask[i, j] = mk
        labels.append(v.label)
    if labels and isinstance(labels[0], np.ndarray):
        label_arr = np.stack(labels)
    else:
        label_arr = np.array(labels, dtype=np.int64)
    return {
        "cats": cats,
        "boxes": boxes,
        "mask": mask,
        "labels": label_arr,
        "frame_indices": indices,
    }


def pad_objects(frame: FrameLayout, m_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fixed-size object arrays: (categories [m], boxes [m,4], validity [m]).

    Keeps the m_max highest-score objects (missing scores count as 1.0,
    ties broken by input order); padding slots carry the padding category
    and a zero box.
    """
    objs = frame.objects
    if len(objs) > m_max:
        scores = np.array([1.0 if o.score is None else o.score for o in objs])
        order = np.lexsort((np.arange(len(objs)), -scores))
        objs = [objs[i] for i in sorted(order[:m_max])]
    cats = np.full(m_max, Vocabulary.PADDING, dtype=np.int64)
    boxes = np.zeros((m_max, 4))
    mask = np.zeros(m_max, dtype=bool)
    for i, o in enumerate(objs):
        cats[i] = o.category
        boxes[i] = o.box.as_array()
        mask[i] = True
    return cats, boxes, mask
