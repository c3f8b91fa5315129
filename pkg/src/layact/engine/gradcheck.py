"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def finite_difference_check(
    build_loss,
    inputs: list[Tensor],
    h: float = 1e-5,
    tol: float = 1e-4,
) -> float:
    """Compare analytic grads of `build_loss()` against central differences.

    `build_loss` must rebuild the forward graph from the same Tensor objects
    on every call (their `.data` is perturbed in place). Returns the maximum
    relative error over all elements of all inputs; the relative error uses
    max(1, |analytic|, |numeric|) as denominator.
    """
    for t in inputs:
        t.grad = None
    loss = build_loss()
    loss.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]
    worst = 0.0
    for t, a in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(build_loss().data)
            flat[i] = orig - h
            down = float(build_loss().data)
            flat[i] = orig
            num = (up - down) / (2.0 * h)
            ana = a.reshape(-1)[i]
            err = abs(ana - num) / max(1.0, abs(ana), abs(num))
            worst = max(worst, err)
    return worst


def assert_gradients_close(build_loss, inputs, h=1e-5, tol=1e-4) -> float:
    err = finite_difference_check(build_loss, inputs, h=h, tol=tol)
    if err >= tol:
        raise AssertionError(f"finite-difference mismatch: rel err {err:.3e} >= {tol}")
    return err
