"""Reverse-mode automatic differentiation over float64 numpy arrays.

Everything is double precision. A Tensor wraps an ndarray plus an optional
position in a computation graph; `backward()` on a scalar populates `.grad`
on every tensor that requires it, visiting each graph node exactly once in
reverse topological order.

Two reduction modes exist:

* fast (default): matmuls go through BLAS. Bit-identical across runs for
  identical shapes and inputs, which is what training and reproducibility
  need.
* exact (`with exact_reductions():`): matmuls use a serial, pinned
  accumulation order, so results are bit-stable under sequence truncation
  (removing trailing rows/keys never changes surviving elements). Slow;
  meant for verification at test scale.

Softmax denominators always use a serial (cumsum) reduction; its cost is
negligible and it keeps masked-attention rows truncation-stable in both
modes.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import numpy as np
from scipy.special import erf

from ..errors import ConfigError, FullyMaskedRowError, NumericalError
from .rng import RngStream

_EXACT = False

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@contextmanager
def exact_reductions():
    """Route matmuls through a pinned serial accumulation order."""
    global _EXACT
    old = _EXACT
    _EXACT = True
    try:
        yield
    finally:
        _EXACT = old


def _pinned_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # serial k-order accumulation: cumsum is defined left-to-right, so
    # trailing zero terms and row/column removal cannot change earlier bits
    prod = a[..., :, :, None] * b[..., None, :, :]
    return np.cumsum(prod, axis=-2)[..., -1, :]


def _matmul_data(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if _EXACT:
        return _pinned_matmul(a, b)
    return np.matmul(a, b)


def _serial_last_sum(x: np.ndarray) -> np.ndarray:
    """Sum over the last axis with pinned left-to-right order, keepdims."""
    return np.cumsum(x, axis=-1)[..., -1:]


class Tensor:
    """n-dimensional float64 array, optionally part of an autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None

    # -- basic introspection --------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.item())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- graph machinery -------------------------------------------------

    def backward(self) -> None:
        """Populate grads of all reachable requires_grad tensors."""
        if self.data.size != 1:
            raise ConfigError("backward requires a scalar loss tensor")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward_fn is not None:
                node._backward_fn(node.grad)

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(_as_tensor(other), -1.0))

    def __rsub__(self, other):
        return add(_as_tensor(other), mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return mul(self, 1.0 / other)
        raise TypeError("tensor division only supports scalars")

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def swapaxes(self, a, b):
        return swapaxes(self, a, b)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return reduce_mean(self, axis, keepdims)


def tensor(data) -> Tensor:
    return Tensor(data)


def param(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accum(t: Tensor, g: np.ndarray) -> None:
    # grads are only ever rebound, never mutated in place, so aliasing views is safe
    t.grad = g if t.grad is None else t.grad + g


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


def _reduce_to(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum-reduce a broadcast gradient back to the original operand shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# -- elementwise / structural ops -----------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data + b.data

    def bw(g):
        if a.requires_grad:
            _accum(a, _reduce_to(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _reduce_to(g, b.data.shape))

    return _make(out, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data * b.data

    def bw(g):
        if a.requires_grad:
            _accum(a, _reduce_to(g * b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _reduce_to(g * a.data, b.data.shape))

    return _make(out, (a, b), bw)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = _matmul_data(a.data, b.data)

    def bw(g):
        if a.requires_grad:
            ga = _matmul_data(g, np.swapaxes(b.data, -1, -2))
            _accum(a, _reduce_to(ga, a.data.shape))
        if b.requires_grad:
            gb = _matmul_data(np.swapaxes(a.data, -1, -2), g)
            _accum(b, _reduce_to(gb, b.data.shape))

    return _make(out, (a, b), bw)


def reshape(x: Tensor, shape) -> Tensor:
    x = _as_tensor(x)
    out = x.data.reshape(shape)

    def bw(g):
        if x.requires_grad:
            _accum(x, g.reshape(x.data.shape))

    return _make(out, (x,), bw)


def swapaxes(x: Tensor, a: int, b: int) -> Tensor:
    x = _as_tensor(x)
    out = np.swapaxes(x.data, a, b)

    def bw(g):
        if x.requires_grad:
            _accum(x, np.swapaxes(g, a, b))

    return _make(np.ascontiguousarray(out), (x,), bw)


def getitem(x: Tensor, key) -> Tensor:
    x = _as_tensor(x)
    out = x.data[key]

    def bw(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[key] = g
            _accum(x, full)

    return _make(np.ascontiguousarray(out), (x,), bw)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def bw(g):
        offset = 0
        for t, s in zip(tensors, sizes):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(offset, offset + s)
                _accum(t, g[tuple(idx)])
            offset += s

    return _make(out, tuple(tensors), bw)


def broadcast_to(x: Tensor, shape) -> Tensor:
    x = _as_tensor(x)
    out = np.broadcast_to(x.data, shape).copy()

    def bw(g):
        if x.requires_grad:
            _accum(x, _reduce_to(g, x.data.shape))

    return _make(out, (x,), bw)


def reduce_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        if not x.requires_grad:
            return
        if axis is None:
            _accum(x, np.broadcast_to(g, x.data.shape).copy())
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accum(x, np.broadcast_to(g, x.data.shape).copy())

    return _make(out, (x,), bw)


def reduce_mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    out = x.data.mean(axis=axis, keepdims=keepdims)
    denom = x.data.size if axis is None else np.prod(
        [x.data.shape[a] for a in (axis if isinstance(axis, tuple) else (axis,))]
    )

    def bw(g):
        if not x.requires_grad:
            return
        gs = g / denom
        if axis is not None and not keepdims:
            gs = np.expand_dims(gs, axis)
        _accum(x, np.broadcast_to(gs, x.data.shape).copy())

    return _make(out, (x,), bw)


# -- activations ------------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    out = np.maximum(x.data, 0.0)

    def bw(g):
        if x.requires_grad:
            _accum(x, g * (x.data > 0.0))

    return _make(out, (x,), bw)


def gelu(x: Tensor) -> Tensor:
    """Exact (erf-based) GELU."""
    x = _as_tensor(x)
    cdf = 0.5 * (1.0 + erf(x.data * _INV_SQRT2))
    out = x.data * cdf

    def bw(g):
        if x.requires_grad:
            pdf = np.exp(-0.5 * x.data * x.data) * _INV_SQRT_2PI
            _accum(x, g * (cdf + x.data * pdf))

    return _make(out, (x,), bw)


def sigmoid(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    out = _stable_sigmoid(x.data)

    def bw(g):
        if x.requires_grad:
            _accum(x, g * out * (1.0 - out))

    return _make(out, (x,), bw)


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# -- normalization, softmax, dropout ----------------------------------------


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-8) -> Tensor:
    """Layer normalization over the last axis (population variance)."""
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    d = x.data.shape[-1]
    if d < 2:
        raise ConfigError("layer_norm needs a last axis of length >= 2")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gamma.data + beta.data

    def bw(g):
        if gamma.requires_grad:
            _accum(gamma, _reduce_to(g * xhat, gamma.data.shape))
        if beta.requires_grad:
            _accum(beta, _reduce_to(g, beta.data.shape))
        if x.requires_grad:
            dxhat = g * gamma.data
            m1 = dxhat.mean(axis=-1, keepdims=True)
            m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
            _accum(x, inv * (dxhat - m1 - xhat * m2))

    return _make(out, (x, gamma, beta), bw)


def masked_softmax(x: Tensor, allowed: np.ndarray | None = None) -> Tensor:
    """Softmax over the last axis; `allowed` marks positions that may receive
    probability mass. Fully-masked rows raise; non-finite inputs raise."""
    x = _as_tensor(x)
    if not np.all(np.isfinite(x.data)):
        raise NumericalError("softmax input contains non-finite values")
    if allowed is not None:
        allowed = np.broadcast_to(np.asarray(allowed, dtype=bool), x.data.shape)
        if not np.all(np.any(allowed, axis=-1)):
            raise FullyMaskedRowError(
                "attention row with no unmasked source position"
            )
        scores = np.where(allowed, x.data, -np.inf)
    else:
        scores = x.data
    m = np.max(scores, axis=-1, keepdims=True)
    e = np.exp(scores - m)
    if allowed is not None:
        e = np.where(allowed, e, 0.0)
    p = e / _serial_last_sum(e)

    def bw(g):
        if x.requires_grad:
            inner = _serial_last_sum(g * p)
            _accum(x, p * (g - inner))

    return _make(p, (x,), bw)


def dropout(x: Tensor, rate: float, training: bool, stream: RngStream | None = None) -> Tensor:
    """Inverted dropout: scales kept units by 1/(1-rate) during training."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    x = _as_tensor(x)
    if not training or rate == 0.0:
        return x
    if stream is None:
        raise ConfigError("training-mode dropout requires an rng stream")
    keep = (stream.uniform(size=x.data.shape) >= rate) / (1.0 - rate)
    out = x.data * keep

    def bw(g):
        if x.requires_grad:
            _accum(x, g * keep)

    return _make(out, (x,), bw)


# -- losses ------------------------------------------------------------------


def cross_entropy(logits: Tensor, target) -> Tensor:
    """Mean negative log-likelihood via log-sum-exp.

    Accepts a [C] vector with an int target or [B, C] with int targets [B].
    """
    logits = _as_tensor(logits)
    x = logits.data
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    t = np.atleast_1d(np.asarray(target, dtype=np.int64))
    n, c = x.shape
    if t.shape != (n,):
        raise ConfigError(f"targets shape {t.shape} does not match batch {n}")
    if np.any(t < 0) or np.any(t >= c):
        raise ConfigError("cross_entropy target out of range")
    m = x.max(axis=-1, keepdims=True)
    e = np.exp(x - m)
    z = e.sum(axis=-1, keepdims=True)
    lse = np.log(z) + m
    nll = lse[:, 0] - x[np.arange(n), t]
    out = nll.mean()

    def bw(g):
        if logits.requires_grad:
            p = e / z
            p[np.arange(n), t] -= 1.0
            gl = p * (g / n)
            _accum(logits, gl[0] if squeeze else gl)

    return _make(np.asarray(out), (logits,), bw)


def binary_cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean sigmoid cross-entropy over all classes (and batch rows, if any)."""
    logits = _as_tensor(logits)
    x = logits.data
    t = np.asarray(targets, dtype=np.float64)
    if t.shape != x.shape:
        raise ConfigError(f"targets shape {t.shape} != logits shape {x.shape}")
    if not np.all((t == 0.0) | (t == 1.0)):
        raise ConfigError("binary_cross_entropy targets must be 0/1")
    # max(x,0) - x*t + log1p(exp(-|x|)) is the standard stabilized form
    per = np.maximum(x, 0.0) - x * t + np.log1p(np.exp(-np.abs(x)))
    out = per.mean()

    def bw(g):
        if logits.requires_grad:
            _accum(logits, (_stable_sigmoid(x) - t) * (g / x.size))

    return _make(np.asarray(out), (logits,), bw)


# -- table lookup and patch extraction ---------------------------------------


def embedding(table: Tensor, idx) -> Tensor:
    """Row gather: out[..., :] = table[idx[...], :]."""
    table = _as_tensor(table)
    idx = np.asarray(idx, dtype=np.int64)
    out = table.data[idx]

    def bw(g):
        if table.requires_grad:
            gt = np.zeros_like(table.data)
            np.add.at(gt, idx, g)
            _accum(table, gt)

    return _make(out, (table,), bw)


def _unfold_shape(n: int, k: int, s: int, p: int) -> int:
    return (n + 2 * p - k) // s + 1


def unfold2d(x: Tensor, ksize: int, stride: int, pad: int) -> Tensor:
    """[B, H, W, C] -> [B, H2, W2, k*k*C] sliding patches (zero padding)."""
    x = _as_tensor(x)
    b, h, w, c = x.data.shape
    h2 = _unfold_shape(h, ksize, stride, pad)
    w2 = _unfold_shape(w, ksize, stride, pad)
    xp = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    sb, sh, sw, sc = xp.strides
    win = np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, h2, w2, ksize, ksize, c),
        strides=(sb, sh * stride, sw * stride, sh, sw, sc),
    )
    out = win.reshape(b, h2, w2, ksize * ksize * c).copy()

    def bw(g):
        if not x.requires_grad:
            return
        g6 = g.reshape(b, h2, w2, ksize, ksize, c)
        gp = np.zeros_like(xp)
        for a in range(ksize):
            for bb in range(ksize):
                gp[:, a : a + stride * h2 : stride, bb : bb + stride * w2 : stride, :] += g6[:, :, :, a, bb, :]
        _accum(x, gp[:, pad : pad + h, pad : pad + w, :])

    return _make(out, (x,), bw)


def unfold3d(x: Tensor, ksize: tuple, stride: tuple, pad: tuple) -> Tensor:
    """[B, T, H, W, C] -> [B, T2, H2, W2, kt*kh*kw*C] sliding patches."""
    x = _as_tensor(x)
    b, t, h, w, c = x.data.shape
    kt, kh, kw = ksize
    st, sh_, sw_ = stride
    pt, ph, pw = pad
    t2 = _unfold_shape(t, kt, st, pt)
    h2 = _unfold_shape(h, kh, sh_, ph)
    w2 = _unfold_shape(w, kw, sw_, pw)
    xp = np.pad(x.data, ((0, 0), (pt, pt), (ph, ph), (pw, pw), (0, 0)))
    sb, s1, s2, s3, s4 = xp.strides
    win = np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, t2, h2, w2, kt, kh, kw, c),
        strides=(sb, s1 * st, s2 * sh_, s3 * sw_, s1, s2, s3, s4),
    )
    out = win.reshape(b, t2, h2, w2, kt * kh * kw * c).copy()

    def bw(g):
        if not x.requires_grad:
            return
        g8 = g.reshape(b, t2, h2, w2, kt, kh, kw, c)
        gp = np.zeros_like(xp)
        for a in range(kt):
            for bb in range(kh):
                for cc in range(kw):
                    gp[
                        :,
                        a : a + st * t2 : st,
                        bb : bb + sh_ * h2 : sh_,
                        cc : cc + sw_ * w2 : sw_,
                        :,
                    ] += g8[:, :, :, :, a, bb, cc, :]
        _accum(x, gp[:, pt : pt + t, ph : ph + h, pw : pw + w, :])

    return _make(out, (x,), bw)
