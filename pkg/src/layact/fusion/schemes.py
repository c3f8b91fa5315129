"""The seven layout/appearance fusion schemes.

One-branch schemes inject appearance features into the layout model (pff:
per-frame sums before the temporal stack; pbf: per-box RoI features inside
the object embedding; ef: the video vector as the temporal stack's first
token; vatf: a cross-attention decoder querying central-frame RoI features
against trunk tokens). Two-branch schemes keep both models whole and fuse
late (lcf: concatenation before the classifier; caf: stacked bidirectional
cross-attention; cacnf: caf trained with additional per-branch losses so
the branches preserve standalone capability).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine.attention import multi_head_attention
from ..engine.params import Linear, linear, linear_init
from ..engine.rng import RngStream
from ..engine.tensor import (
    Tensor,
    binary_cross_entropy,
    broadcast_to,
    concat,
    cross_entropy,
    dropout,
    embedding,
    gelu,
    layer_norm,
    mul,
    param,
    tensor,
)
from ..errors import ConfigError, DataError
from ..model.blocks import (
    NormParams,
    TransformerBlock,
    block_init,
    cross_block_forward,
    norm,
    norm_init,
    stack_forward,
)
from ..model.config import StltConfig
from ..model.stlt import (
    StltWeights,
    _with_class_slot,
    init_stlt_weights,
    spatial_forward,
    temporal_hidden_states,
)
from ..engine.attention import AttentionMask
from .appearance import (
    AppearanceWeights,
    appearance_forward,
    frame_maps,
    frame_vectors,
    init_appearance_weights,
)
from .config import AppearanceConfig, FusionConfig
from .roi import roi_align_many


@dataclass
class FusionWeights:
    stlt: StltWeights
    appearance: AppearanceWeights
    # pff / pbf / ef projections into the layout width
    frame_proj: Linear | None = None
    roi_proj: Linear | None = None
    video_proj: Linear | None = None
    # vatf decoder
    vatf_query: Linear | None = None
    vatf_memory: Linear | None = None
    vatf_memory_norm: NormParams | None = None
    vatf_blocks: list[TransformerBlock] | None = None
    vatf_final: NormParams | None = None
    vatf_classifier: Linear | None = None
    # lcf
    lcf_classifier: Linear | None = None
    # caf / cacnf cross-attention stacks
    caf_app_class: Tensor | None = None
    caf_layout_blocks: list[TransformerBlock] | None = None
    caf_app_blocks: list[TransformerBlock] | None = None
    caf_layout_src_norms: list[NormParams] | None = None
    caf_app_src_norms: list[NormParams] | None = None
    caf_layout_final: NormParams | None = None
    caf_app_final: NormParams | None = None
    caf_classifier: Linear | None = None


def init_fusion_weights(
    stlt_cfg: StltConfig,
    app_cfg: AppearanceConfig,
    fus_cfg: FusionConfig,
    root: RngStream,
) -> FusionWeights:
    """Initialize branch weights from the same named streams the standalone
    models use (identical seeds yield identical branch initializations)."""
    d = stlt_cfg.width
    da = app_cfg.d_a
    c = stlt_cfg.num_actions
    w = FusionWeights(
        stlt=init_stlt_weights(stlt_cfg, root.child("init/stlt")),
        appearance=init_appearance_weights(app_cfg, c, root.child("init/appearance")),
    )
    f = root.child("init/fusion")
    scheme = fus_cfg.scheme
    if scheme == "pff":
        w.frame_proj = linear_init(f.child("frame_proj"), da, d)
    elif scheme == "pbf":
        w.roi_proj = linear_init(f.child("roi_proj"), app_cfg.channels[-1], d)
    elif scheme == "ef":
        w.video_proj = linear_init(f.child("video_proj"), da, d)
    elif scheme == "vatf":
        w.vatf_query = linear_init(f.child("vatf_query"), app_cfg.channels[-1], d)
        w.vatf_memory = linear_init(f.child("vatf_memory"), da, d)
        w.vatf_memory_norm = norm_init(d)
        w.vatf_blocks = [
            block_init(f.child(f"vatf.{i}"), d, stlt_cfg.ff_mult)
            for i in range(fus_cfg.cross_layers)
        ]
        w.vatf_final = norm_init(d)
        w.vatf_classifier = linear_init(f.child("vatf_classifier"), d, c)
    elif scheme == "lcf":
        w.lcf_classifier = linear_init(f.child("lcf_classifier"), d + da, c)
    elif scheme in ("caf", "cacnf"):
        w.caf_app_class = param(f.child("app_class").normal(size=da))
        w.caf_layout_blocks = [
            block_init(f.child(f"caf_layout.{i}"), d, stlt_cfg.ff_mult, d_source=da)
            for i in range(fus_cfg.cross_layers)
        ]
        w.caf_app_blocks = [
            block_init(f.child(f"caf_app.{i}"), da, stlt_cfg.ff_mult, d_source=d)
            for i in range(fus_cfg.cross_layers)
        ]
        w.caf_layout_src_norms = [norm_init(d) for _ in range(fus_cfg.cross_layers)]
        w.caf_app_src_norms = [norm_init(da) for _ in range(fus_cfg.cross_layers)]
        w.caf_layout_final = norm_init(d)
        w.caf_app_final = norm_init(da)
        w.caf_classifier = linear_init(f.child("caf_classifier"), d + da, c)
    return w


# -- one-branch schemes -------------------------------------------------------


def fuse_pff(fw: FusionWeights, frame_vecs: Tensor, frame_embeddings: Tensor) -> Tensor:
    """Sum projected per-frame appearance vectors into the per-frame layout
    embeddings; the result feeds the temporal stack unchanged."""
    return frame_embeddings + linear(frame_vecs, fw.frame_proj)


def fuse_pbf(
    fw: FusionWeights,
    cfg: StltConfig,
    cats_full: np.ndarray,
    boxes_full: np.ndarray,
    roi_vecs: Tensor,
    training: bool = False,
    rng: RngStream | None = None,
) -> Tensor:
    """Object embedding with an added projected RoI term:
    Dropout(LayerNorm(cat + box + roi)). The class slot carries the
    full-frame RoI."""
    c = embedding(fw.stlt.cat_embed, cats_full)
    l = linear(tensor(np.asarray(boxes_full, dtype=np.float64)), fw.stlt.box_proj)
    r = linear(roi_vecs, fw.roi_proj)
    o = layer_norm(c + l + r, fw.stlt.obj_norm.gamma, fw.stlt.obj_norm.beta)
    return dropout(o, cfg.dropout, training, rng.child("obj_dropout") if rng else None)


def fuse_ef(
    fw: FusionWeights,
    cfg: StltConfig,
    video_vec: Tensor,
    frame_embeddings: Tensor,
    training: bool = False,
    rng: RngStream | None = None,
    return_hidden: bool = False,
) -> Tensor:
    """Prepend the projected video vector as the temporal stack's first
    token: sequence [video, frames, class] of length n + 2, positions
    0, 1..n, n+1. Returns the class hidden state (or all hidden states)."""
    v = linear(video_vec, fw.video_proj)
    lead = frame_embeddings.shape[:-2]
    d = frame_embeddings.shape[-1]
    v = v.reshape(lead + (1, d))
    seq = concat([v, frame_embeddings], axis=-2)
    hidden = temporal_hidden_states(
        fw.stlt, cfg, seq, training, rng, position_offset=0
    )
    if return_hidden:
        return hidden
    n_plus_1 = seq.shape[-2]
    return hidden[..., n_plus_1, :]


def fuse_vatf(
    fw: FusionWeights,
    fus_cfg: FusionConfig,
    trunk: Tensor,
    memory_tokens: Tensor,
    central_boxes: np.ndarray,
    central_valid: np.ndarray,
) -> Tensor:
    """Cross-attention decoder: central-frame RoI queries over trunk tokens;
    per-query logits averaged over the valid boxes.

    Decoder blocks replace the query with its attended value (no residual
    around the attention), so a constant memory determines the output
    regardless of the queries; a feed-forward sublayer with residual
    follows.
    """
    central_valid = np.asarray(central_valid, dtype=bool)
    counts = central_valid.sum(axis=-1)
    if np.any(counts < 1):
        raise DataError("a video reached vatf with no boxes in its central frame")
    t = trunk.shape[1]
    central_map = trunk[:, t // 2]
    queries = roi_align_many(central_map, central_boxes, central_valid)
    q = linear(queries, fw.vatf_query)
    memory = norm(linear(memory_tokens, fw.vatf_memory), fw.vatf_memory_norm)
    for blk in fw.vatf_blocks:
        attended = multi_head_attention(
            norm(q, blk.norm1), memory, blk.attn, None, fus_cfg.cross_heads
        )
        h = norm(attended, blk.norm2)
        q = attended + linear(gelu(linear(h, blk.ff.lin1)), blk.ff.lin2)
    q = norm(q, fw.vatf_final)
    per_query = linear(q, fw.vatf_classifier)
    weights = (central_valid / counts[..., None])[..., None]
    return mul(per_query, weights).sum(axis=-2)


# -- two-branch schemes ----------------------------------------------------------


def fuse_lcf(fw: FusionWeights, h_class: Tensor, video_vec: Tensor) -> Tensor:
    """Concatenate the layout class embedding with the video vector, classify."""
    return linear(concat([h_class, video_vec], axis=-1), fw.lcf_classifier)


def fuse_caf(
    fw: FusionWeights,
    fus_cfg: FusionConfig,
    layout_seq: Tensor,
    app_tokens: Tensor,
    app_valid: np.ndarray | None = None,
) -> Tensor:
    """Stacked bidirectional cross-attention between the layout hidden
    sequence and the appearance token sequence; the two class positions are
    concatenated and classified.

    `app_valid` marks usable appearance tokens; the prepended appearance
    class position counts as valid only if at least one token is, so a
    fully-masked appearance side surfaces as a fully-masked-row error.
    """
    lead = app_tokens.shape[:-2]
    da = app_tokens.shape[-1]
    cls = broadcast_to(
        fw.caf_app_class.reshape((1,) * len(lead) + (1, da)), lead + (1, da)
    )
    app = concat([cls, app_tokens], axis=-2)
    app_mask = None
    if app_valid is not None:
        av = np.asarray(app_valid, dtype=bool)
        cls_valid = np.any(av, axis=-1, keepdims=True)
        app_mask = AttentionMask.padding(np.concatenate([cls_valid, av], axis=-1))
    lay = layout_seq
    for i in range(fus_cfg.cross_layers):
        lay_src = norm(lay, fw.caf_layout_src_norms[i])
        app_src = norm(app, fw.caf_app_src_norms[i])
        lay = cross_block_forward(
            lay, app_src, fw.caf_layout_blocks[i], app_mask, fus_cfg.cross_heads
        )
        app = cross_block_forward(
            app, lay_src, fw.caf_app_blocks[i], None, fus_cfg.cross_heads
        )
    lay = norm(lay, fw.caf_layout_final)
    app = norm(app, fw.caf_app_final)
    fused = concat([lay[..., -1, :], app[..., 0, :]], axis=-1)
    return linear(fused, fw.caf_classifier)


def cacnf_loss(
    fused_logits: Tensor,
    layout_logits: Tensor,
    appearance_logits: Tensor,
    targets,
    lambda_layout: float,
    lambda_app: float,
    multi_label: bool = False,
) -> Tensor:
    """Fusion loss plus weighted independent branch losses."""
    if lambda_layout < 0 or lambda_app < 0:
        raise ConfigError("branch-loss weights must be non-negative")
    loss_fn = binary_cross_entropy if multi_label else cross_entropy
    total = loss_fn(fused_logits, targets)
    if lambda_layout > 0:
        total = total + mul(loss_fn(layout_logits, targets), lambda_layout)
    if lambda_app > 0:
        total = total + mul(loss_fn(appearance_logits, targets), lambda_app)
    return total


# -- unified forward ---------------------------------------------------------------


def fusion_forward(
    fw: FusionWeights,
    stlt_cfg: StltConfig,
    app_cfg: AppearanceConfig,
    fus_cfg: FusionConfig,
    batch: dict,
    training: bool = False,
    rng: RngStream | None = None,
) -> dict:
    """Run one fusion scheme over a collated batch.

    Returns {"logits": ...} plus, for two-branch schemes, standalone
    "layout_logits" and "appearance_logits" heads.
    """
    scheme = fus_cfg.scheme
    cats, boxes, mask = batch["cats"], batch["boxes"], batch["mask"]
    out: dict = {}

    if scheme == "pff":
        maps = frame_maps(fw.appearance, tensor(batch["pixel_frames"]))
        vecs = frame_vectors(fw.appearance, maps)
        s_hat = spatial_forward(fw.stlt, stlt_cfg, cats, boxes, mask, training, rng)
        fused = fuse_pff(fw, vecs, s_hat)
        hidden = temporal_hidden_states(fw.stlt, stlt_cfg, fused, training, rng)
        out["logits"] = linear(hidden[..., fused.shape[-2], :], fw.stlt.classifier)
    elif scheme == "pbf":
        maps = frame_maps(fw.appearance, tensor(batch["pixel_frames"]))
        cats_full, boxes_full, mask_full = _with_class_slot(cats, boxes, mask)
        roi_vecs = roi_align_many(maps, boxes_full, mask_full)
        x = fuse_pbf(fw, stlt_cfg, cats_full, boxes_full, roi_vecs, training, rng)
        x = stack_forward(
            x, fw.stlt.spatial_blocks, fw.stlt.spatial_final,
            AttentionMask.padding(mask_full), stlt_cfg.spatial_heads,
        )
        s_hat = x[..., 0, :]
        hidden = temporal_hidden_states(fw.stlt, stlt_cfg, s_hat, training, rng)
        out["logits"] = linear(hidden[..., s_hat.shape[-2], :], fw.stlt.classifier)
    elif scheme == "ef":
        video_vec, _, _ = appearance_forward(fw.appearance, app_cfg, batch["app_frames"])
        s_hat = spatial_forward(fw.stlt, stlt_cfg, cats, boxes, mask, training, rng)
        h = fuse_ef(fw, stlt_cfg, video_vec, s_hat, training, rng)
        out["logits"] = linear(h, fw.stlt.classifier)
    elif scheme == "vatf":
        _, tokens, trunk = appearance_forward(fw.appearance, app_cfg, batch["app_frames"])
        out["logits"] = fuse_vatf(
            fw, fus_cfg, trunk, tokens, batch["central_boxes"], batch["central_valid"]
        )
    elif scheme == "lcf":
        video_vec, _, _ = appearance_forward(fw.appearance, app_cfg, batch["app_frames"])
        s_hat = spatial_forward(fw.stlt, stlt_cfg, cats, boxes, mask, training, rng)
        hidden = temporal_hidden_states(fw.stlt, stlt_cfg, s_hat, training, rng)
        h_class = hidden[..., s_hat.shape[-2], :]
        out["logits"] = fuse_lcf(fw, h_class, video_vec)
        out["layout_logits"] = linear(h_class, fw.stlt.classifier)
        out["appearance_logits"] = linear(video_vec, fw.appearance.classifier)
    elif scheme in ("caf", "cacnf"):
        video_vec, tokens, _ = appearance_forward(
            fw.appearance, app_cfg, batch["app_frames"], encode_tokens=True
        )
        s_hat = spatial_forward(fw.stlt, stlt_cfg, cats, boxes, mask, training, rng)
        hidden = temporal_hidden_states(fw.stlt, stlt_cfg, s_hat, training, rng)
        out["logits"] = fuse_caf(fw, fus_cfg, hidden, tokens)
        out["layout_logits"] = linear(hidden[..., s_hat.shape[-2], :], fw.stlt.classifier)
        out["appearance_logits"] = linear(video_vec, fw.appearance.classifier)
    else:
        raise ConfigError(f"fusion_forward cannot handle scheme {scheme!r}")
    return out
