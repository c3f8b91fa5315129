"""Pre-normalization transformer blocks shared by the layout and fusion models.

Block layout: x += MHA(LN(x)); x += W2 GELU(W1 LN(x)). Stacks finish with a
final layer norm. Cross-attention blocks draw keys/values from a separate,
already-normalized source sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine.attention import AttentionMask, multi_head_attention
from ..engine.params import Linear, MhaWeights, linear, linear_init, mha_init
from ..engine.rng import RngStream
from ..engine.tensor import Tensor, gelu, layer_norm, param


@dataclass
class NormParams:
    gamma: Tensor
    beta: Tensor


@dataclass
class FeedForward:
    lin1: Linear
    lin2: Linear


@dataclass
class TransformerBlock:
    norm1: NormParams
    attn: MhaWeights
    norm2: NormParams
    ff: FeedForward


def norm_init(d: int) -> NormParams:
    return NormParams(gamma=param(np.ones(d)), beta=param(np.zeros(d)))


def block_init(
    stream: RngStream, d: int, ff_mult: int = 4, d_source: int | None = None
) -> TransformerBlock:
    d_src = d_source if d_source is not None else d
    return TransformerBlock(
        norm1=norm_init(d),
        attn=mha_init(stream.child("attn"), d, d_src, d),
        norm2=norm_init(d),
        ff=FeedForward(
            lin1=linear_init(stream.child("ff1"), d, ff_mult * d),
            lin2=linear_init(stream.child("ff2"), ff_mult * d, d),
        ),
    )


def norm(x: Tensor, p: NormParams, eps: float = 1e-8) -> Tensor:
    return layer_norm(x, p.gamma, p.beta, eps)


def block_forward(
    x: Tensor, blk: TransformerBlock, mask: AttentionMask | None, heads: int
) -> Tensor:
    h = norm(x, blk.norm1)
    x = x + multi_head_attention(h, h, blk.attn, mask, heads)
    h = norm(x, blk.norm2)
    return x + linear(gelu(linear(h, blk.ff.lin1)), blk.ff.lin2)


def cross_block_forward(
    x: Tensor,
    source: Tensor,
    blk: TransformerBlock,
    mask: AttentionMask | None,
    heads: int,
) -> Tensor:
    h = norm(x, blk.norm1)
    x = x + multi_head_attention(h, source, blk.attn, mask, heads)
    h = norm(x, blk.norm2)
    return x + linear(gelu(linear(h, blk.ff.lin1)), blk.ff.lin2)


def stack_forward(
    x: Tensor,
    blocks: list[TransformerBlock],
    final: NormParams,
    mask: AttentionMask | None,
    heads: int,
) -> Tensor:
    for blk in blocks:
        x = block_forward(x, blk, mask, heads)
    return norm(x, final)
