"""Toy appearance branch.

A three-stage space-time CNN (3x3x3 kernels, stride-2 spatial downsampling,
16/32/64 channels) with a globally pooled video vector, a pooled patch-token
sequence (optionally passed through one transformer encoder block for
cross-attention fusion), and a per-frame 2D variant for the frame- and
box-level fusion schemes. Real pretrained backbones are out of scope; this
encoder only has to fill the same interface roles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine.params import Linear, linear, linear_init
from ..engine.rng import RngStream
from ..engine.tensor import Tensor, param, relu, tensor, unfold2d, unfold3d
from .config import AppearanceConfig
from ..model.blocks import NormParams, TransformerBlock, block_forward, block_init, norm, norm_init


@dataclass
class AppearanceWeights:
    stages3d: list[Linear]  # conv kernels as [27 * c_in, c_out] matrices
    head: Linear  # 64 -> d_a video vector
    token_proj: Linear  # 64 -> d_a patch tokens
    token_pos: Tensor  # [num_tokens, d_a]
    token_block: TransformerBlock
    token_final: NormParams
    stages2d: list[Linear]  # per-frame variant, [9 * c_in, c_out]
    frame_head: Linear  # 64 -> d_a per-frame vector
    classifier: Linear  # d_a -> num_actions (appearance-only / branch head)


def init_appearance_weights(
    cfg: AppearanceConfig, num_actions: int, stream: RngStream
) -> AppearanceWeights:
    chans = (3,) + cfg.channels
    return AppearanceWeights(
        stages3d=[
            linear_init(stream.child(f"stage3d.{i}"), 27 * chans[i], chans[i + 1])
            for i in range(3)
        ],
        head=linear_init(stream.child("head"), cfg.channels[-1], cfg.d_a),
        token_proj=linear_init(stream.child("token_proj"), cfg.channels[-1], cfg.d_a),
        token_pos=param(
            stream.child("token_pos").normal(scale=0.5, size=(cfg.num_tokens, cfg.d_a))
        ),
        token_block=block_init(stream.child("token_block"), cfg.d_a, cfg.ff_mult),
        token_final=norm_init(cfg.d_a),
        stages2d=[
            linear_init(stream.child(f"stage2d.{i}"), 9 * chans[i], chans[i + 1])
            for i in range(3)
        ],
        frame_head=linear_init(stream.child("frame_head"), cfg.channels[-1], cfg.d_a),
        classifier=linear_init(stream.child("classifier"), cfg.d_a, num_actions),
    )


def frames_to_input(frames_u8: np.ndarray) -> np.ndarray:
    """uint8 [.., T, 3, H, W] -> float channels-last [.., T, H, W, 3] in [0, 1]."""
    arr = np.asarray(frames_u8)
    arr = np.moveaxis(arr, -3, -1)
    return arr.astype(np.float64) / 255.0


def video_trunk(weights: AppearanceWeights, x: Tensor) -> Tensor:
    """[B, T, H, W, 3] -> stage-3 feature volume [B, T, H/8, W/8, 64]."""
    for stage in weights.stages3d:
        x = relu(linear(unfold3d(x, (3, 3, 3), (1, 2, 2), (1, 1, 1)), stage))
    return x


def pooled_tokens(cfg: AppearanceConfig, trunk: Tensor) -> Tensor:
    """Average the trunk into a [B, K, 64] spatio-temporal patch sequence."""
    b, t, h, w, c = trunk.shape
    tt, ss = cfg.token_temporal, cfg.token_spatial
    ft, fs = t // tt, h // ss
    x = trunk.reshape((b, tt, ft, ss, fs, ss, fs, c))
    x = x.mean(axis=(2, 4, 6))
    return x.reshape((b, tt * ss * ss, c))


def appearance_forward(
    weights: AppearanceWeights,
    cfg: AppearanceConfig,
    frames: np.ndarray | Tensor,
    encode_tokens: bool = False,
):
    """Video vector [B, d_a], token sequence [B, K, d_a], trunk volume.

    `frames` is channels-last [B, T, H, W, 3]. With `encode_tokens` the
    token sequence additionally passes through the transformer encoder
    block (cross-attention fusion wants contextualized tokens; the plain
    trunk memory does not).
    """
    x = frames if isinstance(frames, Tensor) else tensor(np.asarray(frames))
    if x.ndim != 5 or x.shape[-1] != 3:
        raise ValueError(f"expected [B, T, H, W, 3] frames, got {x.shape}")
    trunk = video_trunk(weights, x)
    video_vec = linear(trunk.mean(axis=(1, 2, 3)), weights.head)
    tok = linear(pooled_tokens(cfg, trunk), weights.token_proj) + weights.token_pos
    if encode_tokens:
        tok = norm(block_forward(tok, weights.token_block, None, cfg.heads), weights.token_final)
    return video_vec, tok, trunk


def frame_maps(weights: AppearanceWeights, frames: Tensor) -> Tensor:
    """Per-frame 2D encoder: [B, n, H, W, 3] -> [B, n, H/8, W/8, 64]."""
    b, n, h, w, c = frames.shape
    x = frames.reshape((b * n, h, w, c))
    for stage in weights.stages2d:
        x = relu(linear(unfold2d(x, 3, 2, 1), stage))
    _, h3, w3, c3 = x.shape
    return x.reshape((b, n, h3, w3, c3))


def frame_vectors(weights: AppearanceWeights, maps: Tensor) -> Tensor:
    """[B, n, h, w, 64] -> per-frame vectors [B, n, d_a]."""
    return linear(maps.mean(axis=(2, 3)), weights.frame_head)
