"""Deterministic float64 tensor engine with reverse-mode autodiff."""

from .attention import (
    AttentionMask,
    multi_head_attention,
    scaled_dot_product_attention,
    softmax,
)
from .checkpoint import load_container, save_container
from .gradcheck import assert_gradients_close, finite_difference_check
from .optim import Adam, OptimizerState, optimizer_step
from .params import (
    Linear,
    MhaWeights,
    linear,
    linear_init,
    mha_init,
    named_parameters,
    parameter_hash,
)
from .rng import RngStream
from .tensor import (
    Tensor,
    binary_cross_entropy,
    broadcast_to,
    concat,
    cross_entropy,
    dropout,
    embedding,
    exact_reductions,
    gelu,
    layer_norm,
    masked_softmax,
    matmul,
    param,
    relu,
    sigmoid,
    tensor,
    unfold2d,
    unfold3d,
)

__all__ = [
    "Adam",
    "AttentionMask",
    "Linear",
    "MhaWeights",
    "OptimizerState",
    "RngStream",
    "Tensor",
    "assert_gradients_close",
    "binary_cross_entropy",
    "broadcast_to",
    "concat",
    "cross_entropy",
    "dropout",
    "embedding",
    "exact_reductions",
    "finite_difference_check",
    "gelu",
    "layer_norm",
    "linear",
    "linear_init",
    "load_container",
    "masked_softmax",
    "matmul",
    "mha_init",
    "multi_head_attention",
    "named_parameters",
    "optimizer_step",
    "param",
    "parameter_hash",
    "relu",
    "save_container",
    "scaled_dot_product_attention",
    "sigmoid",
    "softmax",
    "tensor",
    "unfold2d",
    "unfold3d",
]
