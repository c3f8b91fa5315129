"""Attention kernels: masks, softmax, scaled dot-product, multi-head.

Shape convention: queries [..., t, d_k], keys [..., s, d_k], values
[..., s, d_v]; leading axes are batch (and, inside multi-head attention,
a head axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .params import Linear, MhaWeights  # noqa: F401  (re-exported)
from .params import linear, linear_init
from .rng import RngStream
from .tensor import Tensor, masked_softmax, matmul, mul, swapaxes


@dataclass
class AttentionMask:
    """Which source positions each target position may attend to.

    kinds: "bidirectional" (everything), "causal" (target i sees source
    j <= i), "padding" (bidirectional restricted to valid source tokens),
    "combined" (causal restricted to valid source tokens).
    """

    kind: str
    valid: np.ndarray | None = None  # [..., s] bool, for padding/combined

    @classmethod
    def bidirectional(cls) -> "AttentionMask":
        return cls("bidirectional")

    @classmethod
    def causal(cls) -> "AttentionMask":
        return cls("causal")

    @classmethod
    def padding(cls, valid) -> "AttentionMask":
        return cls("padding", np.asarray(valid, dtype=bool))

    @classmethod
    def combined(cls, valid) -> "AttentionMask":
        return cls("combined", np.asarray(valid, dtype=bool))

    def allowed(self, t: int, s: int, head_axes: int = 0) -> np.ndarray | None:
        """Boolean array broadcastable against scores [..., (h,) t, s]."""
        causal = self.kind in ("causal", "combined")
        base = np.tri(t, s, k=0, dtype=bool) if causal else None
        if self.valid is None:
            return base
        v = self.valid
        for _ in range(head_axes + 1):  # insert head and target axes
            v = np.expand_dims(v, -2)
        if base is None:
            return np.broadcast_to(v, v.shape[:-2] + (t, s)).copy()
        return v & base


def softmax(v: Tensor) -> Tensor:
    """Probability-normalized exponentials over the last axis (max-shifted)."""
    return masked_softmax(v, None)


def scaled_dot_product_attention(
    q: Tensor, k: Tensor, v: Tensor, mask: AttentionMask | None = None
) -> Tensor:
    """Softmax(Q K^T / sqrt(d_k)) V with optional masking."""
    if q.shape[-1] != k.shape[-1]:
        raise ConfigError(
            f"query dim {q.shape[-1]} does not match key dim {k.shape[-1]}"
        )
    if k.shape[-2] != v.shape[-2]:
        raise ConfigError("keys and values must agree on sequence length")
    d_k = q.shape[-1]
    scores = mul(matmul(q, swapaxes(k, -1, -2)), 1.0 / math.sqrt(d_k))
    allowed = None
    if mask is not None:
        allowed = mask.allowed(q.shape[-2], k.shape[-2])
    weights = masked_softmax(scores, allowed)
    return matmul(weights, v)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    *lead, t, width = x.shape
    d_k = width // heads
    return swapaxes(x.reshape((*lead, t, heads, d_k)), -3, -2)


def _merge_heads(x: Tensor) -> Tensor:
    y = swapaxes(x, -3, -2)
    *lead, t, heads, d_k = y.shape
    return y.reshape((*lead, t, heads * d_k))


def multi_head_attention(
    target: Tensor,
    source: Tensor,
    weights: MhaWeights,
    mask: AttentionMask | None,
    heads: int,
) -> Tensor:
    """Project, attend per head, concatenate, project out.

    Self-attention passes the same tensor as target and source;
    cross-attention draws keys/values from a different modality.
    """
    width = weights.wq.w.shape[1]
    if width % heads != 0:
        raise ConfigError(f"model width {width} not divisible by {heads} heads")
    q = _split_heads(linear(target, weights.wq), heads)
    k = _split_heads(linear(source, weights.wk), heads)
    v = _split_heads(linear(source, weights.wv), heads)
    d_k = width // heads
    scores = mul(matmul(q, swapaxes(k, -1, -2)), 1.0 / math.sqrt(d_k))
    allowed = None
    if mask is not None:
        allowed = mask.allowed(target.shape[-2], source.shape[-2], head_axes=1)
    attended = matmul(masked_softmax(scores, allowed), v)
    return linear(_merge_heads(attended), weights.wo)
