"""Deterministic rasterizer and raw-frame archives for the toy appearance branch."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..data.types import FrameLayout, VideoLayout
from ..errors import ConfigError, DataError
from .generate import SyntheticVideoSpec
from .styles import ObjectStyle

BACKGROUND = 0.1


def _shape_mask(shape: str, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if shape == "rectangle":
        return np.ones_like(u, dtype=bool)
    if shape == "ellipse":
        return ((u - 0.5) / 0.5) ** 2 + ((v - 0.5) / 0.5) ** 2 <= 1.0
    if shape == "triangle":  # apex at the top center, base at the bottom
        return np.abs(u - 0.5) <= 0.5 * v
    if shape == "cross":
        return (np.abs(u - 0.5) <= 0.18) | (np.abs(v - 0.5) <= 0.18)
    raise ConfigError(f"unknown shape {shape!r}")


def rasterize_frame(
    frame: FrameLayout, styles: list[ObjectStyle], resolution: int
) -> np.ndarray:
    """Paint objects over a constant background; painter's order.

    Returns float64 RGB [3, resolution, resolution] in [0, 1]. `styles`
    runs parallel to `frame.objects`.
    """
    if len(styles) != len(frame.objects):
        raise ConfigError("need exactly one style per frame object")
    img = np.full((3, resolution, resolution), BACKGROUND)
    centers = (np.arange(resolution) + 0.5) / resolution
    for obj, style in zip(frame.objects, styles):
        b = obj.box
        cols = np.nonzero((centers >= b.x1) & (centers < b.x2))[0]
        rows = np.nonzero((centers >= b.y1) & (centers < b.y2))[0]
        if cols.size == 0 or rows.size == 0:
            continue
        u = (centers[cols][None, :] - b.x1) / max(b.width, 1e-9)
        v = (centers[rows][:, None] - b.y1) / max(b.height, 1e-9)
        u, v = np.broadcast_arrays(u, v)
        mask = _shape_mask(style.shape, u, v)
        seed = style.texture_seed
        au = ((seed * 29) % 17) / 17.0 * 0.7
        av = ((seed * 53) % 19) / 19.0 * 0.7
        accent = (u >= au) & (u < au + 0.15) & (v >= av) & (v < av + 0.15) & mask
        plain = mask & ~accent
        rr, cc = np.meshgrid(rows, cols, indexing="ij")
        for ch in range(3):
            img[ch, rr[plain], cc[plain]] = style.color[ch]
            img[ch, rr[accent], cc[accent]] = style.color[ch] * 0.55
    return img


def render_video(
    video: VideoLayout,
    spec: SyntheticVideoSpec,
    style_pool: list[ObjectStyle],
    resolution: int,
) -> np.ndarray:
    """uint8 RGB frames [T, 3, res, res] for a generated layout video."""
    by_id = {s.style_id: s for s in style_pool}
    styles = [by_id[i] for i in spec.style_ids]
    frames = [
        rasterize_frame(f, styles[: len(f.objects)], resolution) for f in video.frames
    ]
    return np.clip(np.round(np.stack(frames) * 255.0), 0, 255).astype(np.uint8)


# -- frame archives -----------------------------------------------------------

ARCHIVE_MAGIC = b"LFRA"
ARCHIVE_VERSION = 1


def write_frames_archive(path, items) -> None:
    """Write (video_id, uint8 [T, 3, res, res]) records to one archive file."""
    items = list(items)
    with open(path, "wb") as f:
        f.write(ARCHIVE_MAGIC)
        f.write(struct.pack("<I", ARCHIVE_VERSION))
        f.write(struct.pack("<Q", len(items)))
        for vid, arr in items:
            arr = np.ascontiguousarray(arr, dtype=np.uint8)
            if arr.ndim != 4 or arr.shape[1] != 3 or arr.shape[2] != arr.shape[3]:
                raise ConfigError(f"frames for {vid!r} must be [T, 3, res, res]")
            nb = vid.encode()
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<II", arr.shape[0], arr.shape[2]))
            f.write(arr.tobytes(order="C"))


class FramesArchive:
    """Random-access reader over a frames archive."""

    def __init__(self, path):
        self.path = Path(path)
        raw = self.path.read_bytes()
        if raw[:4] != ARCHIVE_MAGIC:
            raise DataError(f"{path}: not a frames archive")
        (version,) = struct.unpack_from("<I", raw, 4)
        if version != ARCHIVE_VERSION:
            raise DataError(f"{path}: unsupported archive version {version}")
        (count,) = struct.unpack_from("<Q", raw, 8)
        off = 16
        self._index: dict[str, tuple[int, int, int]] = {}
        for _ in range(count):
            (id_len,) = struct.unpack_from("<H", raw, off)
            off += 2
            vid = raw[off : off + id_len].decode()
            off += id_len
            t, res = struct.unpack_from("<II", raw, off)
            off += 8
            self._index[vid] = (off, t, res)
            off += t * 3 * res * res
        if off != len(raw):
            raise DataError(f"{path}: trailing bytes after last record")
        self._raw = raw

    @property
    def ids(self) -> list[str]:
        return list(self._index)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, vid: str) -> bool:
        return vid in self._index

    def get(self, vid: str) -> np.ndarray:
        """uint8 frames [T, 3, res, res] for one video id."""
        if vid not in self._index:
            raise DataError(f"video {vid!r} not in archive {self.path}")
        off, t, res = self._index[vid]
        n = t * 3 * res * res
        return (
            np.frombuffer(self._raw, dtype=np.uint8, count=n, offset=off)
            .reshape(t, 3, res, res)
            .copy()
        )
