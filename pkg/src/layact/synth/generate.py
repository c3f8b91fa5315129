"""Video generation, split planning, and layout corruption."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data.types import (
    BoundingBox,
    FrameLayout,
    LabelSpace,
    ObjectInstance,
    VideoLayout,
    Vocabulary,
)
from ..engine.rng import RngStream
from ..errors import ConfigError, DataError
from .scripts import ACTION_SCRIPTS, CATEGORY_NAMES, ActionScript, _size_schedule
from .styles import ObjectStyle

MAX_GENERATION_RETRIES = 100


def synthetic_vocabulary() -> Vocabulary:
    return Vocabulary(list(CATEGORY_NAMES), generic_name="item")


def synthetic_labels(action_names=None, multi_label: bool = False) -> LabelSpace:
    return LabelSpace(
        list(action_names) if action_names is not None else list(ACTION_SCRIPTS),
        multi_label=multi_label,
    )


@dataclass(frozen=True)
class SyntheticVideoSpec:
    """Provenance record: everything needed to regenerate one video."""

    action_ids: tuple[str, ...]  # one entry, or two for multi-label videos
    style_ids: tuple[int, ...]
    length: int
    seed: int

    @property
    def action_id(self) -> str:
        return self.action_ids[0]


def _boxes_from_paths(centers: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Clamp centers so boxes stay inside the unit frame, emit corner boxes."""
    half = 0.5 * sizes
    cx = np.clip(centers[..., 0], half[..., 0], 1.0 - half[..., 0])
    cy = np.clip(centers[..., 1], half[..., 1], 1.0 - half[..., 1])
    return np.stack(
        [cx - half[..., 0], cy - half[..., 1], cx + half[..., 0], cy + half[..., 1]],
        axis=-1,
    )


def _generate_boxes(action: ActionScript, length: int, stream: RngStream) -> np.ndarray:
    """One attempt: scripted paths + jitter, predicate-checked boxes or raise."""
    last_reason = "no attempt"
    for attempt in range(MAX_GENERATION_RETRIES):
        s = stream.child(f"try{attempt}")
        sizes = action.sample_sizes(s)
        centers = action.sample_paths(s, length, sizes)
        jitter = s.child("jitter").uniform(-action.jitter, action.jitter, centers.shape)
        sizes_t = _size_schedule(action.action_id, length, sizes)
        boxes = _boxes_from_paths(centers + jitter, sizes_t)
        reason = action.check(boxes)
        if reason is None:
            return boxes
        last_reason = reason
    raise DataError(
        f"could not generate {action.action_id!r} within "
        f"{MAX_GENERATION_RETRIES} attempts: {last_reason}"
    )


def generate_video(
    action: ActionScript | str,
    styles: list[ObjectStyle],
    length: int,
    seed: int,
    vocab: Vocabulary | None = None,
    labels: LabelSpace | None = None,
) -> tuple[VideoLayout, SyntheticVideoSpec]:
    """Deterministically generate one layout video for an action script."""
    if isinstance(action, str):
        action = ACTION_SCRIPTS[action]
    if length < 8:
        raise ConfigError("video length must be >= 8 frames")
    if len(styles) != action.num_objects:
        raise ConfigError(
            f"{action.action_id} needs {action.num_objects} styles, got {len(styles)}"
        )
    vocab = vocab or synthetic_vocabulary()
    labels = labels or synthetic_labels()
    stream = RngStream.from_seed(seed, f"synth/{action.action_id}")
    boxes = _generate_boxes(action, length, stream)
    cats = [vocab.index(r) for r in action.roles]
    frames = [
        FrameLayout(
            objects=[
                ObjectInstance(category=cats[m], box=BoundingBox(*boxes[t, m]))
                for m in range(action.num_objects)
            ]
        )
        for t in range(length)
    ]
    spec = SyntheticVideoSpec(
        action_ids=(action.action_id,),
        style_ids=tuple(s.style_id for s in styles),
        length=length,
        seed=seed,
    )
    video = VideoLayout(
        frames=frames,
        label=labels.index(action.action_id),
        id=f"{action.action_id}-{seed:016x}",
    )
    return video, spec


def generate_multi_label_video(
    action_a: ActionScript | str,
    action_b: ActionScript | str,
    styles: list[ObjectStyle],
    length: int,
    seed: int,
    vocab: Vocabulary | None = None,
    labels: LabelSpace | None = None,
) -> tuple[VideoLayout, SyntheticVideoSpec]:
    """Two simultaneous actions, one squeezed into each horizontal half."""
    if isinstance(action_a, str):
        action_a = ACTION_SCRIPTS[action_a]
    if isinstance(action_b, str):
        action_b = ACTION_SCRIPTS[action_b]
    need = action_a.num_objects + action_b.num_objects
    if len(styles) != need:
        raise ConfigError(f"multi-label video needs {need} styles, got {len(styles)}")
    vocab = vocab or synthetic_vocabulary()
    labels = labels or synthetic_labels(multi_label=True)
    if not labels.multi_label:
        raise ConfigError("multi-label generation needs a multi-label LabelSpace")
    stream = RngStream.from_seed(seed, "synth/multi")
    boxes_a = _generate_boxes(action_a, length, stream.child("a"))
    boxes_b = _generate_boxes(action_b, length, stream.child("b"))
    # squeeze x into [0, 0.5) and [0.5, 1); predicates were checked pre-squeeze
    boxes_a = boxes_a.copy()
    boxes_b = boxes_b.copy()
    boxes_a[..., [0, 2]] *= 0.5
    boxes_b[..., [0, 2]] = 0.5 + boxes_b[..., [0, 2]] * 0.5
    cats = [vocab.index(r) for r in action_a.roles + action_b.roles]
    frames = []
    for t in range(length):
        objs = []
        for m in range(action_a.num_objects):
            objs.append(ObjectInstance(cats[m], BoundingBox(*boxes_a[t, m])))
        for m in range(action_b.num_objects):
            objs.append(
                ObjectInstance(cats[action_a.num_objects + m], BoundingBox(*boxes_b[t, m]))
            )
        frames.append(FrameLayout(objects=objs))
    spec = SyntheticVideoSpec(
        action_ids=(action_a.action_id, action_b.action_id),
        style_ids=tuple(s.style_id for s in styles),
        length=length,
        seed=seed,
    )
    video = VideoLayout(
        frames=frames,
        label=labels.multi_hot([action_a.action_id, action_b.action_id]),
        id=f"{action_a.action_id}+{action_b.action_id}-{seed:016x}",
    )
    return video, spec


# -- split planning ---------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    """Which styles and actions go where, and how many videos per cell."""

    kind: str  # "compositional" | "fewshot"
    train_styles: tuple[int, ...]
    test_styles: tuple[int, ...]
    train_videos_per_action: int
    test_videos_per_action: int
    style_action_bias: float = 0.8
    length: int = 24
    base_actions: tuple[str, ...] = ()  # fewshot only
    novel_actions: tuple[str, ...] = ()  # fewshot only
    shots: int = 5  # fewshot only

    def __post_init__(self):
        if self.kind not in ("compositional", "fewshot"):
            raise ConfigError(f"unknown split kind {self.kind!r}")
        if set(self.train_styles) & set(self.test_styles):
            raise ConfigError("train and test style sets must be disjoint")
        if self.kind == "fewshot":
            if set(self.base_actions) & set(self.novel_actions):
                raise ConfigError("base and novel action sets must be disjoint")
            if self.shots < 1:
                raise ConfigError("fewshot needs shots >= 1")


@dataclass
class SplitPlan:
    """Video specs per split; materialize with `materialize`."""

    train: list[SyntheticVideoSpec] = field(default_factory=list)
    test: list[SyntheticVideoSpec] = field(default_factory=list)
    finetune: list[SyntheticVideoSpec] | None = None
    base_test: list[SyntheticVideoSpec] | None = None  # fewshot pretraining eval


def _preferred_style(action_idx: int, slot: int, pool: tuple[int, ...]) -> int:
    # slot offset grows with the wrap count so style tuples stay distinct
    # across up to p*(p-1) actions over a pool of p styles
    p = len(pool)
    return pool[(action_idx + slot * (1 + action_idx // p)) % p]


def _assign_styles(
    action_idx: int,
    num_objects: int,
    pool: tuple[int, ...],
    bias: float,
    stream: RngStream,
) -> tuple[int, ...]:
    out = []
    for slot in range(num_objects):
        s = stream.child(f"slot{slot}")
        if s.uniform() < bias:
            out.append(_preferred_style(action_idx, slot, pool))
        else:
            out.append(int(pool[int(s.child("u").integers(0, len(pool)))]))
    return tuple(out)


def _num_objects(action_id: str) -> int:
    script = ACTION_SCRIPTS.get(action_id)
    return script.num_objects if script is not None else 2


def _plan_cell(
    actions,
    count: int,
    pool: tuple[int, ...],
    bias: float,
    length: int,
    stream: RngStream,
    split_name: str,
) -> list[SyntheticVideoSpec]:
    specs = []
    for a_idx, action_id in enumerate(actions):
        for i in range(count):
            s = stream.child(f"{split_name}/{action_id}/{i}")
            style_ids = _assign_styles(a_idx, _num_objects(action_id), pool, bias, s.child("styles"))
            seed = int(s.child("seed").integers(0, 2**62))
            specs.append(
                SyntheticVideoSpec(
                    action_ids=(action_id,), style_ids=style_ids, length=length, seed=seed
                )
            )
    return specs


def make_split(
    spec: SplitSpec,
    actions,
    style_pool: list[ObjectStyle],
    rng: RngStream,
) -> SplitPlan:
    """Plan train/test (and fewshot fine-tune) video specs.

    Compositional: every action appears in both splits; train videos use the
    (bias-correlated) train styles, test videos the disjoint test styles.
    Fewshot: base actions form the pretraining train/eval sets; each novel
    action gets exactly `shots` fine-tuning videos plus its test videos.
    """
    actions = list(actions)
    pool_ids = {s.style_id for s in style_pool}
    for sid in spec.train_styles + spec.test_styles:
        if sid not in pool_ids:
            raise ConfigError(f"style id {sid} not in the provided pool")
    if not spec.train_styles or not spec.test_styles:
        raise ConfigError("both style sets must be non-empty")

    if spec.kind == "compositional":
        return SplitPlan(
            train=_plan_cell(
                actions, spec.train_videos_per_action, spec.train_styles,
                spec.style_action_bias, spec.length, rng, "train",
            ),
            test=_plan_cell(
                actions, spec.test_videos_per_action, spec.test_styles,
                0.0, spec.length, rng, "test",
            ),
        )

    base = list(spec.base_actions)
    novel = list(spec.novel_actions)
    for a in base + novel:
        if a not in actions:
            raise ConfigError(f"action {a!r} not in the provided action set")
    if not base or not novel:
        raise ConfigError("fewshot split needs non-empty base and novel action sets")
    return SplitPlan(
        train=_plan_cell(
            base, spec.train_videos_per_action, spec.train_styles,
            spec.style_action_bias, spec.length, rng, "train",
        ),
        base_test=_plan_cell(
            base, spec.test_videos_per_action, spec.train_styles,
            0.0, spec.length, rng, "base_test",
        ),
        finetune=_plan_cell(
            novel, spec.shots, spec.test_styles, 0.0, spec.length, rng, "finetune",
        ),
        test=_plan_cell(
            novel, spec.test_videos_per_action, spec.test_styles,
            0.0, spec.length, rng, "test",
        ),
    )


def materialize(
    specs: list[SyntheticVideoSpec],
    style_pool: list[ObjectStyle],
    vocab: Vocabulary | None = None,
    labels: LabelSpace | None = None,
) -> list[tuple[VideoLayout, SyntheticVideoSpec]]:
    """Generate the actual layout videos for a list of specs."""
    by_id = {s.style_id: s for s in style_pool}
    out = []
    for sp in specs:
        styles = [by_id[i] for i in sp.style_ids]
        if len(sp.action_ids) == 1:
            video, _ = generate_video(
                sp.action_ids[0], styles, sp.length, sp.seed, vocab, labels
            )
        else:
            video, _ = generate_multi_label_video(
                sp.action_ids[0], sp.action_ids[1], styles, sp.length, sp.seed, vocab, labels
            )
        out.append((video, sp))
    return out


def corrupt_layout_categories(
    videos: list[VideoLayout],
    rate: float,
    rng: RngStream,
    vocab: Vocabulary | None = None,
) -> list[VideoLayout]:
    """Flip each object's category with probability `rate` (detector-noise
    stand-in). Reserved class/padding categories are never produced."""
    if not 0.0 <= rate <= 1.0:
        raise ConfigError("corruption rate must be in [0, 1]")
    vocab = vocab or synthetic_vocabulary()
    real = [i for i in range(len(vocab)) if i >= len(Vocabulary.RESERVED)]
    if len(real) < 2:
        raise ConfigError("need at least two real categories to corrupt")
    out = []
    for v in videos:
        s = rng.child(v.id)
        frames = []
        for fi, f in enumerate(v.frames):
            objs = []
            for oi, o in enumerate(f.objects):
                if s.child(f"{fi}/{oi}").uniform() < rate:
                    others = [c for c in real if c != o.category]
                    pick = int(s.child(f"{fi}/{oi}/pick").integers(0, len(others)))
                    objs.append(ObjectInstance(others[pick], o.box, o.score))
                else:
                    objs.append(o)
            frames.append(FrameLayout(objs))
        out.append(VideoLayout(frames=frames, label=v.label, id=v.id))
    return out
