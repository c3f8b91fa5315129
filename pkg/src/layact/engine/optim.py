"""Adaptive-moment (Adam) optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .tensor import Tensor


@dataclass
class OptimizerState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)  # first moments, keyed by name
    v: dict = field(default_factory=dict)  # second moments, keyed by name


def optimizer_step(params: list[tuple[str, Tensor]], state: OptimizerState) -> None:
    """One Adam update over all parameters; clears grads afterwards."""
    for name, p in params:
        if p.grad is None:
            raise ConfigError(f"optimizer_step: parameter {name!r} has no gradient")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, p in params:
        g = p.grad
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        p.data = p.data - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p.grad = None


class Adam:
    """Convenience wrapper binding a parameter list to an OptimizerState."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.state = OptimizerState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def step(self) -> None:
        optimizer_step(self.params, self.state)

    def zero_grad(self) -> None:
        for _, p in self.params:
            p.grad = None
