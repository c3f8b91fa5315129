"""Parameter containers, initialization, and parameter-tree utilities.

Weight structs are plain dataclasses whose leaves are Tensors. The generic
walker produces stable dotted names ("spatial.0.attn.wq.w"), which are used
for checkpoint entries, optimizer state, init streams, and freeze hashing.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math

import numpy as np

from .rng import RngStream
from .tensor import Tensor, add, matmul, param


@dataclasses.dataclass
class Linear:
    w: Tensor  # [d_in, d_out]
    b: Tensor | None = None


@dataclasses.dataclass
class MhaWeights:
    """Query/key/value/output projections for multi-head attention."""

    wq: "Linear"
    wk: "Linear"
    wv: "Linear"
    wo: "Linear"


def glorot_normal(stream: RngStream, d_in: int, d_out: int) -> np.ndarray:
    std = math.sqrt(2.0 / (d_in + d_out))
    return stream.normal(0.0, std, size=(d_in, d_out))


def linear_init(stream: RngStream, d_in: int, d_out: int, bias: bool = True) -> Linear:
    w = param(glorot_normal(stream.child("w"), d_in, d_out))
    b = param(np.zeros(d_out)) if bias else None
    return Linear(w=w, b=b)


def linear(x: Tensor, lw: Linear) -> Tensor:
    # flatten leading axes so stacked sequences run as one big GEMM
    if x.ndim > 2:
        lead = x.shape[:-1]
        flat = x.reshape((-1, x.shape[-1]))
        out = matmul(flat, lw.w)
        if lw.b is not None:
            out = add(out, lw.b)
        return out.reshape((*lead, lw.w.shape[-1]))
    out = matmul(x, lw.w)
    if lw.b is not None:
        out = add(out, lw.b)
    return out


def mha_init(
    stream: RngStream, d_target: int, d_source: int, width: int, d_out: int | None = None
) -> MhaWeights:
    """Attention projections; queries map d_target->width, keys/values
    d_source->width, output width->d_out (defaults to d_target)."""
    return MhaWeights(
        wq=linear_init(stream.child("wq"), d_target, width),
        wk=linear_init(stream.child("wk"), d_source, width),
        wv=linear_init(stream.child("wv"), d_source, width),
        wo=linear_init(stream.child("wo"), width, d_out if d_out is not None else d_target),
    )


def named_parameters(obj, prefix: str = ""):
    """Yield (dotted_name, Tensor) leaves of a nested weight structure."""
    if isinstance(obj, Tensor):
        yield prefix or "param", obj
        return
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if v is None:
                continue
            sub = f"{prefix}.{f.name}" if prefix else f.name
            yield from named_parameters(v, sub)
        return
    if isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            sub = f"{prefix}.{i}" if prefix else str(i)
            yield from named_parameters(v, sub)
        return
    if isinstance(obj, dict):
        for k in obj:
            sub = f"{prefix}.{k}" if prefix else str(k)
            yield from named_parameters(obj[k], sub)
        return
    # non-tensor metadata (ints, floats, strings) is skipped


def parameter_hash(obj) -> str:
    """SHA-256 over names, shapes, and raw little-endian bytes of all leaves."""
    h = hashlib.sha256()
    for name, t in named_parameters(obj):
        h.update(name.encode())
        h.update(str(t.data.shape).encode())
        h.update(t.data.astype("<f8").tobytes())
    return h.hexdigest()
