"""Layer norm, dropout, losses, optimizer, rng, checkpoint container."""

import numpy as np
import pytest

from layact.engine import (
    Adam,
    OptimizerState,
    RngStream,
    binary_cross_entropy,
    cross_entropy,
    dropout,
    finite_difference_check,
    layer_norm,
    load_container,
    optimizer_step,
    param,
    parameter_hash,
    save_container,
    tensor,
)
from layact.errors import ConfigError


def stream(name, seed=9):
    return RngStream.from_seed(seed, name)


# -- layer norm ---------------------------------------------------------------


def test_layer_norm_constant_vector_is_beta():
    g = tensor(np.ones(4))
    b = tensor(np.zeros(4))
    out = layer_norm(tensor([3.0, 3.0, 3.0, 3.0]), g, b).data
    assert np.allclose(out, np.zeros(4), atol=1e-3)  # eps guards 0 variance


def test_layer_norm_already_normalized():
    out = layer_norm(tensor([1.0, -1.0]), tensor(np.ones(2)), tensor(np.zeros(2)), eps=0.0).data
    assert np.allclose(out, [1.0, -1.0], atol=1e-12)


def test_layer_norm_reference_value():
    out = layer_norm(tensor([1.0, 2.0, 3.0]), tensor(np.ones(3)), tensor(np.zeros(3)), eps=1e-8).data
    assert np.allclose(out, [-1.22474, 0.0, 1.22474], atol=1e-4)


def test_layer_norm_zero_mean_unit_variance():
    s = stream("ln")
    for _ in range(20):
        x = s.normal(scale=5.0, size=(3, 8))
        out = layer_norm(tensor(x), tensor(np.ones(8)), tensor(np.zeros(8)), eps=1e-12).data
        assert np.allclose(out.mean(axis=-1), 0.0, atol=1e-10)
        assert np.allclose(out.var(axis=-1), 1.0, atol=1e-6)


def test_layer_norm_gradients():
    s = stream("lngrad")
    x = param(s.child("x").normal(size=(2, 5)))
    g = param(s.child("g").normal(size=5))
    b = param(s.child("b").normal(size=5))

    def build():
        y = layer_norm(x, g, b)
        return (y * y).sum()

    assert finite_difference_check(build, [x, g, b]) < 1e-4


def test_layer_norm_length_one_rejected():
    with pytest.raises(ConfigError):
        layer_norm(tensor([[1.0]]), tensor([1.0]), tensor([0.0]))


# -- dropout -------------------------------------------------------------------


def test_dropout_eval_identity():
    x = tensor(stream("d1").normal(size=(4, 4)))
    out = dropout(x, 0.5, training=False)
    assert out.data is x.data  # bit-exact pass-through


def test_dropout_rate_zero_identity():
    x = tensor(stream("d2").normal(size=(4, 4)))
    out = dropout(x, 0.0, training=True, stream=stream("d2s"))
    assert np.array_equal(out.data, x.data)


def test_dropout_rate_one_rejected():
    with pytest.raises(ConfigError):
        dropout(tensor(np.ones(3)), 1.0, training=True, stream=stream("d3"))


def test_dropout_preserves_mean_monte_carlo():
    # inverted scaling keeps E[out] = x; estimate over 10^4 draws
    x = np.full(100, 2.5)
    s = stream("mc")
    total = np.zeros_like(x)
    reps = 100  # 100 reps x 100 elements = 10^4 bernoulli draws
    for i in range(reps):
        total += dropout(tensor(x), 0.5, training=True, stream=s.child(f"r{i}")).data
    est = total.mean() / reps
    assert abs(est - 2.5) / 2.5 < 0.02


def test_dropout_deterministic_given_stream():
    x = tensor(stream("dd").normal(size=(8, 8)))
    a = dropout(x, 0.3, training=True, stream=stream("fixed")).data
    b = dropout(x, 0.3, training=True, stream=stream("fixed")).data
    assert np.array_equal(a, b)


def test_dropout_gradient_fixed_mask():
    x = param(stream("dg").normal(size=(3, 4)))

    def build():
        y = dropout(x, 0.4, training=True, stream=stream("mask-fixed"))
        return (y * y).sum()

    assert finite_difference_check(build, [x]) < 1e-4


# -- losses --------------------------------------------------------------------


def test_cross_entropy_uniform_logits():
    loss = cross_entropy(tensor(np.zeros(4)), 2)
    assert abs(loss.item() - np.log(4.0)) < 1e-12


def test_cross_entropy_saturated():
    logits = np.zeros(3)
    logits[1] = 50.0
    assert cross_entropy(tensor(logits), 1).item() < 1e-20


def test_cross_entropy_gradient_closed_form():
    s = stream("ce")
    logits = param(s.normal(size=5))
    loss = cross_entropy(logits, 3)
    loss.backward()
    e = np.exp(logits.data - logits.data.max())
    p = e / e.sum()
    onehot = np.eye(5)[3]
    assert np.allclose(logits.grad, p - onehot, atol=1e-12)


def test_cross_entropy_target_out_of_range():
    with pytest.raises(ConfigError):
        cross_entropy(tensor(np.zeros(3)), 3)


def test_cross_entropy_batch_mean():
    s = stream("ceb")
    x = s.normal(size=(4, 6))
    t = np.array([0, 5, 2, 2])
    batch = cross_entropy(tensor(x), t).item()
    singles = np.mean([cross_entropy(tensor(x[i]), t[i]).item() for i in range(4)])
    assert abs(batch - singles) < 1e-12


def test_bce_zero_logits():
    for targets in ([1.0, 0.0], [0.0, 0.0], [1.0, 1.0]):
        loss = binary_cross_entropy(tensor(np.zeros(2)), targets)
        assert abs(loss.item() - np.log(2.0)) < 1e-12


def test_bce_saturated():
    assert binary_cross_entropy(tensor([10.0, -10.0]), [1.0, 0.0]).item() < 1e-4


def test_bce_reference_value():
    loss = binary_cross_entropy(tensor([0.5, -0.3]), [1.0, 1.0]).item()
    assert abs(loss - 0.665) < 1e-3


def test_bce_rejects_non_binary():
    with pytest.raises(ConfigError):
        binary_cross_entropy(tensor([0.0, 0.0]), [0.5, 1.0])


def test_loss_gradients():
    s = stream("lg")
    x = param(s.child("a").normal(size=(3, 4)))
    assert finite_difference_check(lambda: cross_entropy(x, np.array([1, 0, 3])), [x]) < 1e-4
    y = param(s.child("b").normal(size=(2, 3)))
    t = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    assert finite_difference_check(lambda: binary_cross_entropy(y, t), [y]) < 1e-4


# -- optimizer -------------------------------------------------------------------


def test_optimizer_zero_grad_no_move():
    p = param(np.array([1.0, -2.0]))
    p.grad = np.zeros(2)
    state = OptimizerState(lr=0.1)
    optimizer_step([("p", p)], state)
    assert np.array_equal(p.data, [1.0, -2.0])
    assert p.grad is None


def test_optimizer_missing_grad_raises():
    p = param(np.ones(2))
    with pytest.raises(ConfigError):
        optimizer_step([("p", p)], OptimizerState())


def test_optimizer_descends_quadratic():
    w = param(np.array([1.0]))
    opt = Adam([("w", w)], lr=0.1)
    loss0 = (w * w).item()
    loss = (w * w).sum()
    loss.backward()
    opt.step()
    assert (w * w).item() < loss0


def test_optimizer_converges_to_analytic_optimum():
    # f(w) = (w0 - 3)^2 + 2*(w1 + 1)^2, optimum (3, -1)
    w = param(np.array([0.0, 0.0]))
    opt = Adam([("w", w)], lr=0.05)
    for _ in range(200):
        d = w - tensor(np.array([3.0, -1.0]))
        loss = (d * d * tensor(np.array([1.0, 2.0]))).sum()
        loss.backward()
        opt.step()
    assert np.all(np.abs(w.data - np.array([3.0, -1.0])) <= 1e-3 * 10)
    d = w.data - np.array([3.0, -1.0])
    f = d[0] ** 2 + 2 * d[1] ** 2
    assert f <= 1e-3


# -- rng ---------------------------------------------------------------------------


def test_rng_children_independent_and_deterministic():
    r1 = RngStream.from_seed(42).child("a").normal(size=5)
    r2 = RngStream.from_seed(42).child("a").normal(size=5)
    r3 = RngStream.from_seed(42).child("b").normal(size=5)
    assert np.array_equal(r1, r2)
    assert not np.array_equal(r1, r3)


def test_rng_child_does_not_consume_parent():
    parent = RngStream.from_seed(7)
    _ = parent.child("x")
    a = parent.normal(size=3)
    parent2 = RngStream.from_seed(7)
    b = parent2.normal(size=3)
    assert np.array_equal(a, b)


# -- checkpoint container -----------------------------------------------------------


def test_container_roundtrip_bit_exact(tmp_path):
    s = stream("ckpt")
    entries = {
        "layer.w": s.child("w").normal(size=(4, 3)),
        "layer.b": s.child("b").normal(size=3),
        "scalarish": np.array(3.25),
    }
    meta = {"kind": "test", "num": 3}
    path = tmp_path / "c.lact"
    save_container(path, entries, meta)
    meta2, loaded = load_container(path)
    assert meta2 == meta
    assert set(loaded) == set(entries)
    for k in entries:
        assert np.array_equal(loaded[k], entries[k])
        assert loaded[k].dtype == np.float64


def test_container_rejects_garbage(tmp_path):
    from layact.errors import DataError

    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(DataError):
        load_container(p)


def test_parameter_hash_tracks_content():
    a = param(np.ones((2, 2)))
    b = param(np.zeros(3))
    h1 = parameter_hash({"a": a, "b": b})
    a.data = a.data + 0.0
    assert parameter_hash({"a": a, "b": b}) == h1
    a.data = a.data + 1e-12
    assert parameter_hash({"a": a, "b": b}) != h1
