"""Layout transformer: embedding, spatial/temporal stacks, invariants."""

import numpy as np
import pytest

from layact.data import Vocabulary, collate_videos
from layact.engine import (
    RngStream,
    cross_entropy,
    finite_difference_check,
    named_parameters,
    tensor,
)
from layact.model import (
    StltConfig,
    embed_object,
    init_joint_weights,
    init_stlt_weights,
    spatial_forward,
    stlt_forward,
    stlt_joint_forward,
    temporal_forward,
)
from layact.synth import generate_video, make_style_pool, synthetic_labels, synthetic_vocabulary

VOCAB = synthetic_vocabulary()
LABELS = synthetic_labels()


def small_cfg(**over):
    defaults = dict(
        vocab_size=len(VOCAB), num_actions=4, width=16,
        spatial_layers=1, spatial_heads=2, temporal_layers=1, temporal_heads=2,
        dropout=0.1, m_max=3, frames=4, ff_mult=2,
    )
    defaults.update(over)
    return StltConfig(**defaults)


def weights_for(cfg, seed=0):
    return init_stlt_weights(cfg, RngStream.from_seed(seed, "init/stlt"))


def random_inputs(cfg, stream, batch=(), frames=None):
    n = frames if frames is not None else cfg.frames
    shape = batch + (n, cfg.m_max)
    cats = stream.child("c").integers(2, cfg.vocab_size, size=shape)
    lo = stream.child("b1").uniform(0.0, 0.5, size=shape + (2,))
    hi = lo + stream.child("b2").uniform(0.05, 0.45, size=shape + (2,))
    boxes = np.concatenate([lo, np.minimum(hi, 1.0)], axis=-1)
    mask = stream.child("m").uniform(size=shape) < 0.7
    return cats, boxes, mask


def test_default_config_values():
    cfg = StltConfig(vocab_size=4, num_actions=12)
    assert (cfg.width, cfg.spatial_layers, cfg.spatial_heads) == (128, 2, 4)
    assert (cfg.temporal_layers, cfg.temporal_heads) == (2, 4)
    assert cfg.dropout == 0.1 and cfg.m_max == 7 and cfg.frames == 16


def test_embed_object_deterministic_eval():
    cfg = small_cfg()
    w = weights_for(cfg)
    a = embed_object(w, cfg, np.array(2), np.array([0.1, 0.1, 0.4, 0.5])).data
    b = embed_object(w, cfg, np.array(2), np.array([0.1, 0.1, 0.4, 0.5])).data
    assert np.array_equal(a, b)
    assert a.shape == (cfg.width,)


def test_embed_object_zero_projections_give_beta():
    cfg = small_cfg()
    w = weights_for(cfg)
    w.cat_embed.data = np.zeros_like(w.cat_embed.data)
    w.box_proj.w.data = np.zeros_like(w.box_proj.w.data)
    w.box_proj.b.data = np.zeros_like(w.box_proj.b.data)
    w.obj_norm.beta.data = np.full(cfg.width, 0.25)
    out = embed_object(w, cfg, np.array(3), np.array([0.2, 0.2, 0.8, 0.8])).data
    assert np.allclose(out, 0.25, atol=1e-3)


def test_embed_object_matches_composed_ops():
    # composition oracle: embedding + box projection + layer norm, by hand
    from layact.engine.tensor import layer_norm as ln

    cfg = small_cfg()
    w = weights_for(cfg, seed=3)
    cats = np.array([2, 3])
    boxes = np.array([[0.1, 0.2, 0.5, 0.9], [0.0, 0.0, 1.0, 1.0]])
    got = embed_object(w, cfg, cats, boxes).data
    c = w.cat_embed.data[cats]
    l = boxes @ w.box_proj.w.data + w.box_proj.b.data
    expect = ln(tensor(c + l), w.obj_norm.gamma, w.obj_norm.beta).data
    assert np.allclose(got, expect, atol=1e-12)


def test_spatial_permutation_invariance():
    cfg = small_cfg(m_max=4)
    w = weights_for(cfg, seed=1)
    s = RngStream.from_seed(5, "perm")
    for trial in range(10):
        cats, boxes, mask = random_inputs(cfg, s.child(f"t{trial}"), frames=1)
        cats, boxes, mask = cats[0], boxes[0], mask[0]
        base = spatial_forward(w, cfg, cats, boxes, mask).data
        perm = s.child(f"p{trial}").permutation(cfg.m_max)
        out = spatial_forward(w, cfg, cats[perm], boxes[perm], mask[perm]).data
        assert np.allclose(base, out, atol=1e-9)


def test_spatial_empty_frame_uses_class_token():
    cfg = small_cfg()
    w = weights_for(cfg, seed=2)
    cats = np.full(cfg.m_max, Vocabulary.PADDING)
    boxes = np.zeros((cfg.m_max, 4))
    mask = np.zeros(cfg.m_max, dtype=bool)
    a = spatial_forward(w, cfg, cats, boxes, mask).data
    b = spatial_forward(w, cfg, cats + 1, boxes + 0.5, mask).data  # junk in padding
    assert np.array_equal(a, b)
    assert np.all(np.isfinite(a))


def test_spatial_padding_neutrality():
    cfg = small_cfg(m_max=5)
    w = weights_for(cfg, seed=4)
    s = RngStream.from_seed(6, "padneutral")
    cats, boxes, mask = random_inputs(cfg, s, frames=1)
    cats, boxes, mask = cats[0], boxes[0], mask[0]
    mask[3:] = False
    base = spatial_forward(w, cfg, cats, boxes, mask).data
    cats2 = cats.copy()
    boxes2 = boxes.copy()
    cats2[3:] = 2
    boxes2[3:] = [0.3, 0.3, 0.9, 0.9]
    out = spatial_forward(w, cfg, cats2, boxes2, mask).data
    assert np.allclose(base, out, atol=1e-9)


def test_temporal_causality_bit_exact():
    cfg = small_cfg(frames=6)
    w = weights_for(cfg, seed=7)
    s = RngStream.from_seed(8, "caus")
    emb = s.normal(size=(6, cfg.width))
    full = temporal_forward(w, cfg, tensor(emb))
    # hidden state at frame i is invariant to altering frames > i
    from layact.engine.attention import AttentionMask
    from layact.model.blocks import stack_forward
    # compare intermediate hiddens through the public path: truncate inputs
    # after altering later frames and compare the class-free prefix
    emb2 = emb.copy()
    emb2[4:] += s.child("noise").normal(size=(2, cfg.width))
    def hidden_states(e):
        from layact.engine.tensor import layer_norm, concat, broadcast_to
        pos = w.pos_embed[0:6]
        t_in = layer_norm(tensor(e) + pos, w.temporal_norm.gamma, w.temporal_norm.beta)
        cls = layer_norm(w.temporal_class + w.pos_embed[6], w.temporal_norm.gamma, w.temporal_norm.beta)
        seq = concat([t_in, broadcast_to(cls.reshape((1, cfg.width)), (1, cfg.width))], axis=-2)
        return stack_forward(seq, w.temporal_blocks, w.temporal_final, AttentionMask.causal(), cfg.temporal_heads).data
    h1 = hidden_states(emb)
    h2 = hidden_states(emb2)
    assert np.array_equal(h1[:4], h2[:4])
    assert not np.allclose(h1[4:6], h2[4:6])


def test_temporal_class_attends_full_past():
    cfg = small_cfg(frames=5)
    w = weights_for(cfg, seed=9)
    s = RngStream.from_seed(10, "sens")
    emb = s.normal(size=(5, cfg.width))
    base = temporal_forward(w, cfg, tensor(emb)).data
    emb2 = emb.copy()
    emb2[0] += 1e-2
    out = temporal_forward(w, cfg, tensor(emb2)).data
    assert not np.array_equal(base, out)
    assert np.linalg.norm(base - out) > 0


def test_stlt_forward_shapes_and_finite():
    cfg = small_cfg()
    w = weights_for(cfg, seed=11)
    s = RngStream.from_seed(12, "fwd")
    cats, boxes, mask = random_inputs(cfg, s, batch=(3,))
    logits = stlt_forward(w, cfg, cats, boxes, mask)
    assert logits.shape == (3, cfg.num_actions)
    assert np.all(np.isfinite(logits.data))


def test_stlt_batch_equals_per_sample():
    cfg = small_cfg()
    w = weights_for(cfg, seed=13)
    s = RngStream.from_seed(14, "batch")
    cats, boxes, mask = random_inputs(cfg, s, batch=(4,))
    batched = stlt_forward(w, cfg, cats, boxes, mask).data
    for i in range(4):
        single = stlt_forward(w, cfg, cats[i], boxes[i], mask[i]).data
        assert np.allclose(batched[i], single, atol=1e-10)


def test_stlt_eval_repeatable_training_stochastic():
    cfg = small_cfg()
    w = weights_for(cfg, seed=15)
    s = RngStream.from_seed(16, "rep")
    cats, boxes, mask = random_inputs(cfg, s, batch=(2,))
    a = stlt_forward(w, cfg, cats, boxes, mask).data
    b = stlt_forward(w, cfg, cats, boxes, mask).data
    assert np.array_equal(a, b)
    t1 = stlt_forward(w, cfg, cats, boxes, mask, training=True, rng=RngStream.from_seed(1, "d")).data
    t2 = stlt_forward(w, cfg, cats, boxes, mask, training=True, rng=RngStream.from_seed(1, "d")).data
    t3 = stlt_forward(w, cfg, cats, boxes, mask, training=True, rng=RngStream.from_seed(2, "d")).data
    assert np.array_equal(t1, t2)
    assert not np.array_equal(t1, t3)


def test_stlt_gradient_reaches_every_weight_group():
    cfg = small_cfg()
    w = weights_for(cfg, seed=17)
    s = RngStream.from_seed(18, "gradflow")
    cats, boxes, mask = random_inputs(cfg, s, batch=(2,))
    mask[..., 0] = True  # ensure some real objects
    logits = stlt_forward(w, cfg, cats, boxes, mask, training=True,
                          rng=RngStream.from_seed(3, "drop"))
    loss = cross_entropy(logits, np.array([1, 2]))
    loss.backward()
    for name, p in named_parameters(w):
        assert p.grad is not None, name
        assert np.any(p.grad != 0.0), f"zero gradient in {name}"


def test_stlt_gradcheck_end_to_end():
    cfg = small_cfg(width=8, spatial_heads=2, temporal_heads=2, m_max=2, frames=2, ff_mult=2)
    w = weights_for(cfg, seed=19)
    s = RngStream.from_seed(20, "fd")
    cats, boxes, mask = random_inputs(cfg, s, batch=(1,))
    mask[..., 0] = True
    targets = np.array([1])
    leaves = [p for _, p in named_parameters(w)]

    def build():
        return cross_entropy(stlt_forward(w, cfg, cats, boxes, mask), targets)

    # spot-check a few parameter groups end to end (full set is covered by
    # the per-op suite; this keeps runtime sane)
    subset = [w.cat_embed, w.box_proj.w, w.temporal_class,
              w.spatial_blocks[0].attn.wq.w, w.temporal_blocks[0].ff.lin1.b,
              w.classifier.w]
    assert finite_difference_check(build, subset) < 1e-4
    assert len(leaves) > 20


def test_joint_variant_sequence_and_symmetry():
    cfg = small_cfg(m_max=3, frames=3)
    w = init_joint_weights(cfg, RngStream.from_seed(21, "init/joint"))
    s = RngStream.from_seed(22, "joint")
    cats, boxes, mask = random_inputs(cfg, s)
    base = stlt_joint_forward(w, cfg, cats, boxes, mask).data
    assert base.shape == (cfg.num_actions,)

    # permuting objects within one frame leaves logits unchanged
    perm = np.array([2, 0, 1])
    cats2, boxes2, mask2 = cats.copy(), boxes.copy(), mask.copy()
    cats2[1] = cats[1][perm]
    boxes2[1] = boxes[1][perm]
    mask2[1] = mask[1][perm]
    out = stlt_joint_forward(w, cfg, cats2, boxes2, mask2).data
    assert np.allclose(base, out, atol=1e-9)

    # swapping two frames' contents (and their differing positions) changes logits
    cats3, boxes3, mask3 = cats.copy(), boxes.copy(), mask.copy()
    cats3[[0, 2]] = cats[[2, 0]]
    boxes3[[0, 2]] = boxes[[2, 0]]
    mask3[[0, 2]] = mask[[2, 0]]
    out3 = stlt_joint_forward(w, cfg, cats3, boxes3, mask3).data
    assert not np.allclose(base, out3, atol=1e-9)


def test_collate_feeds_model():
    pool = make_style_pool(4)
    videos = []
    for i, action in enumerate(["approach", "drop-into"]):
        v, _ = generate_video(action, pool[:2], 12, 100 + i)
        videos.append(v)
    batch = collate_videos(videos, n=8, m_max=3, mode="uniform")
    cfg = small_cfg(frames=8, num_actions=len(LABELS))
    w = weights_for(cfg, seed=23)
    logits = stlt_forward(w, cfg, batch["cats"], batch["boxes"], batch["mask"])
    assert logits.shape == (2, len(LABELS))
    assert np.all(np.isfinite(logits.data))
