"""RoI align: exact average of the bilinear interpolant over a box region.

Bilinear interpolation over a feature map (pixel centers at integer
coordinates, border-clamped) is a sum of separable hat basis functions, so
the box average is a weighted sum of pixel values whose weights factor into
1D hat integrals. That makes the op exactly linear in the feature map:
forward is a weighted contraction and gradients flow through a matmul.
"""

from __future__ import annotations

import numpy as np

from ..data.types import BoundingBox
from ..engine.tensor import Tensor, matmul, tensor
from ..errors import DataError


def _hat_cumulative(t: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Integral of the unit hat centered at c from c-1 up to t."""
    u = np.clip(t, c - 1.0, c + 1.0)
    left = 0.5 * (u - c + 1.0) ** 2
    right = 1.0 - 0.5 * (c + 1.0 - u) ** 2
    return np.where(u <= c, left, right)


def _axis_weights(lo: np.ndarray, hi: np.ndarray, size: int) -> np.ndarray:
    """Per-pixel weights [..., size] of the box average along one axis.

    lo/hi are the box edges in normalized [0, 1]; pixel j carries the hat
    centered at j in continuous coordinates u = x * size - 0.5. The border
    pixels are constant (value 1) outside the pixel-center range, so their
    hat halves there are replaced by a constant segment.
    """
    a = lo * size - 0.5
    b = hi * size - 0.5
    length = b - a
    if size == 1:
        return np.ones(lo.shape + (1,))
    centers = np.arange(size, dtype=np.float64)
    a_ = a[..., None]
    b_ = b[..., None]
    w = _hat_cumulative(b_, centers) - _hat_cumulative(a_, centers)
    # pixel 0: right hat half from max(a, 0) plus a constant segment on u < 0
    w[..., 0] = (
        _hat_cumulative(b, np.float64(0.0))
        - _hat_cumulative(np.maximum(a, 0.0), np.float64(0.0))
        + np.maximum(np.minimum(b, 0.0) - a, 0.0)
    )
    # pixel size-1: left hat half up to min(b, size-1) plus constant above
    last = np.float64(size - 1)
    w[..., -1] = (
        _hat_cumulative(np.minimum(b, last), last)
        - _hat_cumulative(a, last)
        + np.maximum(b - np.maximum(a, last), 0.0)
    )
    return w / length[..., None]


def roi_weights(boxes: np.ndarray, h: int, w: int, valid=None) -> np.ndarray:
    """Pixel weight maps [..., h, w] averaging to 1 over each valid box."""
    boxes = np.asarray(boxes, dtype=np.float64)
    wx = _axis_weights(boxes[..., 0], boxes[..., 2], w)
    wy = _axis_weights(boxes[..., 1], boxes[..., 3], h)
    out = wy[..., :, None] * wx[..., None, :]
    if valid is not None:
        out = np.where(np.asarray(valid, dtype=bool)[..., None, None], out, 0.0)
    return out


def roi_align(feature_map: Tensor, box: BoundingBox) -> Tensor:
    """Average-pool a [C, H, W] feature map over one box; returns [C]."""
    if not isinstance(feature_map, Tensor):
        feature_map = tensor(feature_map)
    if box.area == 0.0:
        raise DataError(f"degenerate zero-area box {box}")
    c, h, w = feature_map.shape
    weights = roi_weights(box.as_array(), h, w).reshape(h * w, 1)
    flat = feature_map.reshape((c, h * w))
    return matmul(flat, tensor(weights))[:, 0]


def roi_align_many(feature_map: Tensor, boxes: np.ndarray, valid=None) -> Tensor:
    """Batched box averages.

    feature_map [..., H, W, C] (channels last), boxes [..., Q, 4],
    optional validity [..., Q]; returns [..., Q, C] with zero vectors at
    invalid slots.
    """
    boxes = np.asarray(boxes, dtype=np.float64)
    if valid is None:
        areas = (boxes[..., 2] - boxes[..., 0]) * (boxes[..., 3] - boxes[..., 1])
        if np.any(areas <= 0):
            raise DataError("degenerate zero-area box in roi_align_many")
    else:
        areas = (boxes[..., 2] - boxes[..., 0]) * (boxes[..., 3] - boxes[..., 1])
        if np.any((areas <= 0) & np.asarray(valid, dtype=bool)):
            raise DataError("degenerate zero-area box marked valid")
        # avoid 0/0 in weight normalization for invalid slots
        boxes = boxes.copy()
        inv = ~np.asarray(valid, dtype=bool)
        boxes[inv] = np.array([0.0, 0.0, 1.0, 1.0])
    *lead, h, w, c = feature_map.shape
    weights = roi_weights(boxes, h, w, valid)  # [..., Q, h, w]
    q = weights.shape[-3]
    wmat = tensor(weights.reshape(tuple(lead) + (q, h * w)))
    flat = feature_map.reshape(tuple(lead) + (h * w, c))
    return matmul(wmat, flat)
