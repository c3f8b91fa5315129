"""Layout branch: object embedding, per-frame (spatial) transformer,
across-video (temporal) transformer, classifier, and the joint single-stack
variant.

All forwards are batched: array arguments accept arbitrary leading axes
(categories [..., m], boxes [..., m, 4], masks [..., m] for one frame;
an extra frame axis for whole videos). The class token is prepended per
frame in the spatial stack (category index 0, full-frame box) and appended
after the last frame in the causal temporal stack (position index n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.types import Vocabulary
from ..engine.attention import AttentionMask
from ..engine.params import Linear, linear, linear_init
from ..engine.rng import RngStream
from ..engine.tensor import (
    Tensor,
    broadcast_to,
    concat,
    dropout,
    embedding,
    layer_norm,
    param,
    tensor,
)
from .blocks import NormParams, TransformerBlock, block_init, norm, norm_init, stack_forward
from .config import StltConfig

CLASS_BOX = np.array([0.0, 0.0, 1.0, 1.0])


@dataclass
class StltWeights:
    cat_embed: Tensor  # [vocab, d]
    box_proj: Linear  # 4 -> d
    obj_norm: NormParams
    spatial_blocks: list[TransformerBlock]
    spatial_final: NormParams
    pos_embed: Tensor  # [frames + 2, d]
    temporal_norm: NormParams
    temporal_class: Tensor  # [d]
    temporal_blocks: list[TransformerBlock]
    temporal_final: NormParams
    classifier: Linear  # d -> num_actions


@dataclass
class JointStltWeights:
    """Single bidirectional stack over all frames' object tokens."""

    cat_embed: Tensor
    box_proj: Linear
    obj_norm: NormParams
    pos_embed: Tensor
    blocks: list[TransformerBlock]
    final: NormParams
    classifier: Linear


def init_stlt_weights(cfg: StltConfig, stream: RngStream) -> StltWeights:
    d = cfg.width
    return StltWeights(
        cat_embed=param(stream.child("cat_embed").normal(size=(cfg.vocab_size, d))),
        box_proj=linear_init(stream.child("box_proj"), 4, d),
        obj_norm=norm_init(d),
        spatial_blocks=[
            block_init(stream.child(f"spatial.{i}"), d, cfg.ff_mult)
            for i in range(cfg.spatial_layers)
        ],
        spatial_final=norm_init(d),
        pos_embed=param(stream.child("pos_embed").normal(size=(cfg.num_positions, d))),
        temporal_norm=norm_init(d),
        temporal_class=param(stream.child("temporal_class").normal(size=d)),
        temporal_blocks=[
            block_init(stream.child(f"temporal.{i}"), d, cfg.ff_mult)
            for i in range(cfg.temporal_layers)
        ],
        temporal_final=norm_init(d),
        classifier=linear_init(stream.child("classifier"), d, cfg.num_actions),
    )


def init_joint_weights(cfg: StltConfig, stream: RngStream) -> JointStltWeights:
    d = cfg.width
    depth = cfg.spatial_layers + cfg.temporal_layers
    return JointStltWeights(
        cat_embed=param(stream.child("cat_embed").normal(size=(cfg.vocab_size, d))),
        box_proj=linear_init(stream.child("box_proj"), 4, d),
        obj_norm=norm_init(d),
        pos_embed=param(stream.child("pos_embed").normal(size=(cfg.num_positions, d))),
        blocks=[block_init(stream.child(f"joint.{i}"), d, cfg.ff_mult) for i in range(depth)],
        final=norm_init(d),
        classifier=linear_init(stream.child("classifier"), d, cfg.num_actions),
    )


def embed_object(
    weights,
    cfg: StltConfig,
    cats,
    boxes,
    training: bool = False,
    rng: RngStream | None = None,
) -> Tensor:
    """Dropout(LayerNorm(category embedding + box embedding))."""
    c = embedding(weights.cat_embed, np.asarray(cats, dtype=np.int64))
    l = linear(tensor(np.asarray(boxes, dtype=np.float64)), weights.box_proj)
    o = layer_norm(c + l, weights.obj_norm.gamma, weights.obj_norm.beta)
    return dropout(o, cfg.dropout, training, rng.child("obj_dropout") if rng else None)


def _with_class_slot(cats, boxes, mask):
    """Prepend the class token slot (category 0, full-frame box, valid)."""
    cats = np.asarray(cats, dtype=np.int64)
    boxes = np.asarray(boxes, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    lead = cats.shape[:-1]
    cats_full = np.concatenate(
        [np.full(lead + (1,), Vocabulary.CLASS_TOKEN, dtype=np.int64), cats], axis=-1
    )
    boxes_full = np.concatenate(
        [np.broadcast_to(CLASS_BOX, lead + (1, 4)), boxes], axis=-2
    )
    mask_full = np.concatenate([np.ones(lead + (1,), dtype=bool), mask], axis=-1)
    return cats_full, boxes_full, mask_full


def spatial_forward(
    weights: StltWeights,
    cfg: StltConfig,
    cats,
    boxes,
    mask,
    training: bool = False,
    rng: RngStream | None = None,
) -> Tensor:
    """Bidirectional attention over one frame's objects plus the class token;
    returns the class position's final hidden state ([..., d])."""
    cats_full, boxes_full, mask_full = _with_class_slot(cats, boxes, mask)
    x = embed_object(weights, cfg, cats_full, boxes_full, training, rng)
    attn_mask = AttentionMask.padding(mask_full)
    x = stack_forward(
        x, weights.spatial_blocks, weights.spatial_final, attn_mask, cfg.spatial_heads
    )
    return x[..., 0, :]


def temporal_hidden_states(
    weights: StltWeights,
    cfg: StltConfig,
    frame_embeddings: Tensor,
    training: bool = False,
    rng: RngStream | None = None,
    position_offset: int = 0,
) -> Tensor:
    """Causal attention over frame embeddings plus an appended class token.

    Returns all final hidden states [..., n+1, d]; the class token sits last
    and receives position index n (shifted by `position_offset` when a fusion
    scheme prepends extra tokens upstream).
    """
    n = frame_embeddings.shape[-2]
    d = frame_embeddings.shape[-1]
    lead = frame_embeddings.shape[:-2]
    pos = weights.pos_embed[position_offset : position_offset + n]
    t_in = layer_norm(
        frame_embeddings + pos, weights.temporal_norm.gamma, weights.temporal_norm.beta
    )
    t_in = dropout(
        t_in, cfg.dropout, training, rng.child("temporal_dropout") if rng else None
    )
    cls = layer_norm(
        weights.temporal_class + weights.pos_embed[position_offset + n],
        weights.temporal_norm.gamma,
        weights.temporal_norm.beta,
    )
    cls = broadcast_to(cls.reshape((1,) * len(lead) + (1, d)), lead + (1, d))
    cls = dropout(
        cls, cfg.dropout, training, rng.child("temporal_class_dropout") if rng else None
    )
    seq = concat([t_in, cls], axis=-2)
    return stack_forward(
        seq,
        weights.temporal_blocks,
        weights.temporal_final,
        AttentionMask.causal(),
        cfg.temporal_heads,
    )


def temporal_forward(
    weights: StltWeights,
    cfg: StltConfig,
    frame_embeddings: Tensor,
    training: bool = False,
    rng: RngStream | None = None,
) -> Tensor:
    """Class position's final hidden state after the causal stack ([..., d])."""
    n = frame_embeddings.shape[-2]
    hidden = temporal_hidden_states(weights, cfg, frame_embeddings, training, rng)
    return hidden[..., n, :]


def stlt_forward(
    weights: StltWeights,
    cfg: StltConfig,
    cats,
    boxes,
    mask,
    training: bool = False,
    rng: RngStream | None = None,
) -> Tensor:
    """Full layout branch: per-frame spatial stack, temporal stack, classifier.

    cats [..., n, m], boxes [..., n, m, 4], mask [..., n, m] -> logits [..., C].
    """
    s_hat = spatial_forward(weights, cfg, cats, boxes, mask, training, rng)
    h_class = temporal_forward(weights, cfg, s_hat, training, rng)
    return linear(h_class, weights.classifier)


def stlt_joint_forward(
    weights: JointStltWeights,
    cfg: StltConfig,
    cats,
    boxes,
    mask,
    training: bool = False,
    rng: RngStream | None = None,
) -> Tensor:
    """Joint variant: one bidirectional stack over all n*m object tokens
    (each summed with its frame-position embedding) plus one class token."""
    cats = np.asarray(cats, dtype=np.int64)
    boxes = np.asarray(boxes, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    *lead, n, m = cats.shape
    lead = tuple(lead)
    d = cfg.width

    obj = embed_object(weights, cfg, cats, boxes, training, rng)  # [..., n, m, d]
    pos = weights.pos_embed[0:n].reshape((n, 1, d))
    tokens = (obj + pos).reshape(lead + (n * m, d))

    cls = embed_object(
        weights, cfg, np.array(Vocabulary.CLASS_TOKEN), CLASS_BOX, training,
        rng.child("joint_class") if rng else None,
    )
    cls = cls + weights.pos_embed[n]
    cls = broadcast_to(cls.reshape((1,) * len(lead) + (1, d)), lead + (1, d))

    seq = concat([cls, tokens], axis=-2)
    valid = np.concatenate(
        [np.ones(lead + (1,), dtype=bool), mask.reshape(lead + (n * m,))], axis=-1
    )
    x = stack_forward(
        seq, weights.blocks, weights.final, AttentionMask.padding(valid), cfg.spatial_heads
    )
    return linear(x[..., 0, :], weights.classifier)
