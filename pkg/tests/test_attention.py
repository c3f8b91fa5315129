"""Attention kernels: softmax, scaled dot-product, multi-head, masks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layact.engine import (
    AttentionMask,
    Linear,
    MhaWeights,
    RngStream,
    exact_reductions,
    finite_difference_check,
    mha_init,
    multi_head_attention,
    param,
    scaled_dot_product_attention,
    softmax,
    tensor,
)
from layact.errors import ConfigError, FullyMaskedRowError, NumericalError


def stream(name, seed=5):
    return RngStream.from_seed(seed, name)


# -- softmax -----------------------------------------------------------------


def test_softmax_symmetry_and_shift():
    assert np.allclose(softmax(tensor([0.0, 0.0])).data, [0.5, 0.5], atol=1e-15)
    for c in (-3.0, 0.0, 17.5):
        assert np.allclose(softmax(tensor([c, c, c])).data, [1 / 3] * 3, atol=1e-15)


def test_softmax_reference_value():
    out = softmax(tensor([1.0, 2.0, 3.0])).data
    assert np.allclose(out, [0.09003, 0.24473, 0.66524], atol=1e-5)


def test_softmax_normalizes_and_rejects_nonfinite():
    s = stream("sm")
    for _ in range(20):
        v = s.normal(scale=30.0, size=7)
        p = softmax(tensor(v)).data
        assert np.all(p >= 0)
        assert abs(p.sum() - 1.0) < 1e-12
    with pytest.raises(NumericalError):
        softmax(tensor([1.0, np.inf]))
    with pytest.raises(NumericalError):
        softmax(tensor([np.nan, 0.0]))


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12), st.floats(-30, 30))
@settings(max_examples=60, deadline=None)
def test_softmax_shift_invariance(vals, c):
    v = np.array(vals)
    a = softmax(tensor(v)).data
    b = softmax(tensor(v + c)).data
    assert np.all(np.abs(a - b) < 1e-12)


# -- scaled dot-product attention ---------------------------------------------


def test_sdpa_single_source_row():
    # with one source position every output row equals the single value row
    s = stream("one")
    for _ in range(10):
        q = tensor(s.normal(size=(4, 3)))
        k = tensor(s.normal(size=(1, 3)))
        v = tensor(s.normal(size=(1, 5)))
        out = scaled_dot_product_attention(q, k, v).data
        assert np.allclose(out, np.broadcast_to(v.data, (4, 5)), atol=1e-15)


def test_sdpa_constant_scores_average():
    s = stream("const")
    q = tensor(np.zeros((2, 3)))
    k = tensor(s.normal(size=(5, 3)))
    v = tensor(s.normal(size=(5, 4)))
    out = scaled_dot_product_attention(q, k, v).data
    assert np.allclose(out, np.broadcast_to(v.data.mean(axis=0), (2, 4)), atol=1e-12)


def test_sdpa_reference_value():
    q = tensor([[2.0]])
    k = tensor([[1.0], [-1.0]])
    v = tensor([[1.0, 0.0], [0.0, 1.0]])
    out = scaled_dot_product_attention(q, k, v).data
    assert np.allclose(out, [[0.98201, 0.01799]], atol=1e-5)


def test_sdpa_oracle_random():
    # independent dense oracle: explicit softmax-weighted sum
    s = stream("oracle")
    for _ in range(25):
        t, src, dk, dv = s.integers(1, 6), s.integers(1, 6), s.integers(1, 5), s.integers(1, 5)
        q = s.normal(size=(t, dk))
        k = s.normal(size=(src, dk))
        v = s.normal(size=(src, dv))
        sc = q @ k.T / np.sqrt(dk)
        e = np.exp(sc - sc.max(axis=-1, keepdims=True))
        p = e / e.sum(axis=-1, keepdims=True)
        expected = p @ v
        got = scaled_dot_product_attention(tensor(q), tensor(k), tensor(v)).data
        assert np.allclose(got, expected, atol=1e-12)


def test_sdpa_rows_are_convex_combinations():
    s = stream("convex")
    for _ in range(30):
        q = tensor(s.normal(size=(5, 4)))
        k = tensor(s.normal(size=(6, 4)))
        v = tensor(s.normal(size=(6, 3)))
        out = scaled_dot_product_attention(q, k, v).data
        lo = v.data.min(axis=0) - 1e-12
        hi = v.data.max(axis=0) + 1e-12
        assert np.all(out >= lo) and np.all(out <= hi)


def test_sdpa_fully_masked_row_raises():
    q = tensor(np.zeros((2, 3)))
    k = tensor(np.zeros((2, 3)))
    v = tensor(np.zeros((2, 2)))
    with pytest.raises(FullyMaskedRowError):
        scaled_dot_product_attention(q, k, v, AttentionMask.padding([False, False]))


def test_sdpa_dim_mismatch():
    with pytest.raises(ConfigError):
        scaled_dot_product_attention(
            tensor(np.zeros((2, 3))), tensor(np.zeros((2, 4))), tensor(np.zeros((2, 2)))
        )


def test_sdpa_padding_mask_zeroes_contribution():
    s = stream("padmask")
    q = tensor(s.normal(size=(3, 4)))
    k = tensor(s.normal(size=(5, 4)))
    v = tensor(s.normal(size=(5, 2)))
    valid = np.array([True, True, False, True, False])
    out = scaled_dot_product_attention(q, k, v, AttentionMask.padding(valid)).data
    ref = scaled_dot_product_attention(
        tensor(q.data), tensor(k.data[valid]), tensor(v.data[valid])
    ).data
    assert np.allclose(out, ref, atol=1e-12)


# -- causal masking ------------------------------------------------------------


def test_causal_prefix_truncation_bit_exact():
    # exact mode pins reduction order, so prefix recomputation is bit-identical
    s = stream("prefix")
    with exact_reductions():
        for trial in range(20):
            n = int(s.integers(3, 12))
            p = int(s.integers(1, n))
            q = s.normal(size=(n, 4))
            k = s.normal(size=(n, 4))
            v = s.normal(size=(n, 3))
            full = scaled_dot_product_attention(
                tensor(q), tensor(k), tensor(v), AttentionMask.causal()
            ).data
            pre = scaled_dot_product_attention(
                tensor(q[:p]), tensor(k[:p]), tensor(v[:p]), AttentionMask.causal()
            ).data
            assert np.array_equal(full[:p], pre)


def test_causal_altered_suffix_bit_exact_fast_mode():
    s = stream("alter")
    for trial in range(20):
        n = 9
        q = s.normal(size=(n, 4))
        k = s.normal(size=(n, 4))
        v = s.normal(size=(n, 3))
        out1 = scaled_dot_product_attention(
            tensor(q), tensor(k), tensor(v), AttentionMask.causal()
        ).data
        q2, k2, v2 = q.copy(), k.copy(), v.copy()
        q2[5:] += 1.0
        k2[5:] -= 2.0
        v2[5:] *= 3.0
        out2 = scaled_dot_product_attention(
            tensor(q2), tensor(k2), tensor(v2), AttentionMask.causal()
        ).data
        # row i only sees sources <= i; rows < 5 never see altered content
        assert np.array_equal(out1[:5], out2[:5])


# -- multi-head attention -------------------------------------------------------


def _identity_mha(d):
    eye = np.eye(d)
    return MhaWeights(
        wq=Linear(w=param(eye.copy())),
        wk=Linear(w=param(eye.copy())),
        wv=Linear(w=param(eye.copy())),
        wo=Linear(w=param(eye.copy())),
    )


def test_mha_single_head_identity_collapses_to_sdpa():
    s = stream("mha1")
    x = tensor(s.normal(size=(5, 4)))
    out = multi_head_attention(x, x, _identity_mha(4), AttentionMask.bidirectional(), heads=1)
    ref = scaled_dot_product_attention(x, x, x)
    assert np.allclose(out.data, ref.data, atol=1e-15)


def test_mha_width_not_divisible_raises():
    s = stream("mha2")
    w = mha_init(s, 6, 6, 6)
    x = tensor(s.normal(size=(3, 6)))
    with pytest.raises(ConfigError):
        multi_head_attention(x, x, w, None, heads=4)


def test_mha_causal_prefix_property():
    # output at position 0 is invariant to all later source positions
    s = stream("mha3")
    w = mha_init(s.child("w"), 8, 8, 8)
    x1 = s.normal(size=(6, 8))
    x2 = x1.copy()
    x2[1:] += s.normal(size=(5, 8))
    o1 = multi_head_attention(tensor(x1), tensor(x1), w, AttentionMask.causal(), 2).data
    o2 = multi_head_attention(tensor(x2), tensor(x2), w, AttentionMask.causal(), 2).data
    assert np.array_equal(o1[0], o2[0])


def test_mha_matches_per_head_loop_oracle():
    # brute-force oracle: slice projections per head, attend, concat, project
    s = stream("mha4")
    heads, width = 2, 8
    w = mha_init(s.child("w"), width, width, width)
    x = s.normal(size=(4, width))
    got = multi_head_attention(tensor(x), tensor(x), w, AttentionMask.bidirectional(), heads).data

    dk = width // heads
    q = x @ w.wq.w.data + w.wq.b.data
    k = x @ w.wk.w.data + w.wk.b.data
    v = x @ w.wv.w.data + w.wv.b.data
    per_head = []
    for h in range(heads):
        sl = slice(h * dk, (h + 1) * dk)
        sc = q[:, sl] @ k[:, sl].T / np.sqrt(dk)
        e = np.exp(sc - sc.max(axis=-1, keepdims=True))
        p = e / e.sum(axis=-1, keepdims=True)
        per_head.append(p @ v[:, sl])
    expected = np.concatenate(per_head, axis=-1) @ w.wo.w.data + w.wo.b.data
    assert np.allclose(got, expected, atol=1e-10)


def test_mha_batched_equals_per_sample():
    s = stream("mha5")
    w = mha_init(s.child("w"), 8, 8, 8)
    xb = s.normal(size=(3, 5, 8))
    batched = multi_head_attention(tensor(xb), tensor(xb), w, AttentionMask.causal(), 4).data
    for i in range(3):
        single = multi_head_attention(
            tensor(xb[i]), tensor(xb[i]), w, AttentionMask.causal(), 4
        ).data
        assert np.allclose(batched[i], single, atol=1e-10)


def test_attention_gradients():
    s = stream("gradattn")
    q = param(s.child("q").normal(size=(3, 4)))
    k = param(s.child("k").normal(size=(5, 4)))
    v = param(s.child("v").normal(size=(5, 2)))

    def build():
        out = scaled_dot_product_attention(q, k, v, AttentionMask.causal())
        return (out * out).sum()

    assert finite_difference_check(build, [q, k, v]) < 1e-4

    w = mha_init(s.child("w"), 4, 4, 4)
    x = param(s.child("x").normal(size=(4, 4)))
    leaves = [x, w.wq.w, w.wq.b, w.wk.w, w.wk.b, w.wv.w, w.wv.b, w.wo.w, w.wo.b]

    def build_mha():
        out = multi_head_attention(x, x, w, AttentionMask.combined([True, True, False, True]), 2)
        return (out * out).sum()

    assert finite_difference_check(build_mha, leaves) < 1e-4
