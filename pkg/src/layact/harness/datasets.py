"""Dataset assembly: synthetic generation or annotation-file ingestion,
frame caching for the appearance branch, and batch collation."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data.parse import parse_annotations
from ..data.sampling import collate_videos, pad_objects, sample_frame_indices
from ..data.types import LabelSpace, VideoLayout, Vocabulary
from ..engine.rng import RngStream
from ..errors import ConfigError, DataError
from ..fusion.appearance import frames_to_input
from ..synth.generate import (
    SplitSpec,
    SyntheticVideoSpec,
    corrupt_layout_categories,
    generate_multi_label_video,
    make_split,
    materialize,
    synthetic_labels,
    synthetic_vocabulary,
)
from ..synth.render import FramesArchive, render_video
from ..synth.scripts import ACTION_NAMES
from ..synth.styles import make_style_pool


@dataclass
class Sample:
    video: VideoLayout
    spec: SyntheticVideoSpec | None = None
    app_frames: np.ndarray | None = None  # uint8 [T', 3, res, res]
    all_frames: np.ndarray | None = None  # uint8 [T, 3, res, res] (pff/pbf)
    central_boxes: np.ndarray | None = None  # [m_max, 4] (vatf)
    central_valid: np.ndarray | None = None  # [m_max]


@dataclass
class LoadedData:
    train: list[Sample]
    val: list[Sample]
    vocab: Vocabulary
    labels: LabelSpace
    finetune: list[Sample] | None = None
    novel_actions: tuple[str, ...] = ()


@dataclass(frozen=True)
class BatchNeeds:
    """Which arrays collation must produce for the chosen model/scheme."""

    app_frames: bool = False
    pixel_frames: bool = False
    central_boxes: bool = False

    @classmethod
    def for_config(cls, model: str, scheme: str) -> "BatchNeeds":
        if scheme in ("ef", "lcf", "caf", "cacnf"):
            return cls(app_frames=True)
        if scheme == "vatf":
            return cls(app_frames=True, central_boxes=True)
        if scheme in ("pff", "pbf"):
            return cls(pixel_frames=True)
        if model == "appearance":
            return cls(app_frames=True)
        return cls()


def _attach_pixels(
    pairs,
    style_pool,
    resolution: int,
    t_prime: int,
    m_max: int,
    needs: BatchNeeds,
) -> list[Sample]:
    samples = []
    for video, spec in pairs:
        s = Sample(video=video, spec=spec)
        if needs.app_frames or needs.pixel_frames or needs.central_boxes:
            frames_u8 = render_video(video, spec, style_pool, resolution)
            if needs.pixel_frames:
                s.all_frames = frames_u8
            if needs.app_frames:
                idx = sample_frame_indices(len(video.frames), t_prime, "uniform")
                s.app_frames = frames_u8[idx]
            if needs.central_boxes:
                idx = sample_frame_indices(len(video.frames), t_prime, "uniform")
                central = video.frames[int(idx[t_prime // 2])]
                cats, boxes, valid = pad_objects(central, m_max)
                s.central_boxes = boxes
                s.central_valid = valid
        samples.append(s)
    return samples


def build_synthetic_data(cfg, root: RngStream, needs: BatchNeeds) -> LoadedData:
    """Generate the split prescribed by the config, with optional layout
    corruption (applied to train and validation alike, like detector noise)
    and rendered-frame caches for pixel-consuming models."""
    vocab = synthetic_vocabulary()
    pool = make_style_pool(cfg.synthetic_styles)
    half = cfg.synthetic_styles // 2
    train_styles = tuple(range(half))
    test_styles = tuple(range(half, cfg.synthetic_styles))

    if cfg.synthetic_multi_label:
        return _build_multi_label(cfg, root, needs, vocab, pool, train_styles, test_styles)

    labels = synthetic_labels()
    if cfg.synthetic_kind == "compositional":
        spec = SplitSpec(
            kind="compositional",
            train_styles=train_styles,
            test_styles=test_styles,
            train_videos_per_action=cfg.synthetic_train_per_action,
            test_videos_per_action=cfg.synthetic_test_per_action,
            style_action_bias=cfg.synthetic_bias,
            length=cfg.synthetic_length,
        )
        plan = make_split(spec, ACTION_NAMES, pool, root.child("split"))
        splits = {"train": plan.train, "val": plan.test}
        finetune_specs = None
        novel = ()
    else:
        base = tuple(a for a in cfg.synthetic_base_actions.split(",") if a)
        novel = tuple(a for a in cfg.synthetic_novel_actions.split(",") if a)
        if not base or not novel:
            raise ConfigError("fewshot mode needs synthetic_base_actions and synthetic_novel_actions")
        spec = SplitSpec(
            kind="fewshot",
            train_styles=train_styles,
            test_styles=test_styles,
            train_videos_per_action=cfg.synthetic_train_per_action,
            test_videos_per_action=cfg.synthetic_test_per_action,
            style_action_bias=cfg.synthetic_bias,
            length=cfg.synthetic_length,
            base_actions=base,
            novel_actions=novel,
            shots=cfg.synthetic_shots,
        )
        plan = make_split(spec, ACTION_NAMES, pool, root.child("split"))
        splits = {"train": plan.train, "val": plan.base_test, "test": plan.test}
        finetune_specs = plan.finetune

    out = {}
    for name, specs in splits.items():
        pairs = materialize(specs, pool, vocab, labels)
        if cfg.synthetic_corrupt > 0:
            videos = corrupt_layout_categories(
                [v for v, _ in pairs], cfg.synthetic_corrupt,
                root.child(f"corrupt/{name}"), vocab,
            )
            pairs = list(zip(videos, [sp for _, sp in pairs]))
        out[name] = _attach_pixels(
            pairs, pool, cfg.resolution, cfg.appearance_frames, cfg.m_max, needs
        )
    finetune = None
    if finetune_specs is not None:
        pairs = materialize(finetune_specs, pool, vocab, labels)
        if cfg.synthetic_corrupt > 0:
            videos = corrupt_layout_categories(
                [v for v, _ in pairs], cfg.synthetic_corrupt,
                root.child("corrupt/finetune"), vocab,
            )
            pairs = list(zip(videos, [sp for _, sp in pairs]))
        finetune = _attach_pixels(
            pairs, pool, cfg.resolution, cfg.appearance_frames, cfg.m_max, needs
        )

    data = LoadedData(
        train=out["train"], val=out["val"], vocab=vocab, labels=labels,
        finetune=finetune, novel_actions=novel,
    )
    if "test" in out:
        data.novel_test = out["test"]
    return data


def _build_multi_label(cfg, root, needs, vocab, pool, train_styles, test_styles):
    """Two simultaneous actions per video; labels are multi-hot vectors."""
    labels = synthetic_labels(multi_label=True)
    k = len(ACTION_NAMES)

    def build_split(count_per_action, style_ids, name):
        samples = []
        stream = root.child(f"multi/{name}")
        total = count_per_action * k
        for i in range(total):
            s = stream.child(f"v{i}")
            a = i % k
            b = (a + 1 + int(s.child("pair").integers(0, k - 1))) % k
            ids = [int(style_ids[int(s.child(f"s{j}").integers(0, len(style_ids)))]) for j in range(4)]
            styles = [pool[j] for j in ids]
            seed = int(s.child("seed").integers(0, 2**62))
            video, spec = generate_multi_label_video(
                ACTION_NAMES[a], ACTION_NAMES[b], styles, cfg.synthetic_length, seed,
                vocab, labels,
            )
            samples.append((video, spec))
        return _attach_pixels(samples, pool, cfg.resolution, cfg.appearance_frames, cfg.m_max, needs)

    return LoadedData(
        train=build_split(cfg.synthetic_train_per_action, train_styles, "train"),
        val=build_split(cfg.synthetic_test_per_action, test_styles, "val"),
        vocab=vocab,
        labels=labels,
    )


def load_file_data(cfg, needs: BatchNeeds) -> LoadedData:
    """Ingest JSON-lines annotations (and frame archives if pixels are needed)."""
    categories = [c for c in cfg.categories.split(",") if c]
    actions = [a for a in cfg.actions.split(",") if a]
    if not categories:
        raise ConfigError("file mode needs a 'categories' list")
    vocab = Vocabulary(categories)
    labels = LabelSpace(actions, multi_label=cfg.task == "multi")
    threshold = None if cfg.oracle else cfg.score_threshold

    def load_split(path, frames_path, name):
        videos, _ = parse_annotations(
            Path(path).read_text(), vocab, labels, strict=True, score_threshold=threshold
        )
        archive = None
        if needs.app_frames or needs.pixel_frames or needs.central_boxes:
            if not frames_path:
                raise ConfigError(f"the chosen scheme needs a frames archive for {name}")
            archive = FramesArchive(frames_path)
        samples = []
        for v in videos:
            s = Sample(video=v)
            if archive is not None:
                frames_u8 = archive.get(v.id)
                if frames_u8.shape[2] != cfg.resolution:
                    raise DataError(
                        f"archive resolution {frames_u8.shape[2]} != configured {cfg.resolution}"
                    )
                if needs.pixel_frames:
                    s.all_frames = frames_u8
                if needs.app_frames:
                    idx = sample_frame_indices(frames_u8.shape[0], cfg.appearance_frames, "uniform")
                    s.app_frames = frames_u8[idx]
                if needs.central_boxes:
                    idx = sample_frame_indices(len(v.frames), cfg.appearance_frames, "uniform")
                    central = v.frames[int(idx[cfg.appearance_frames // 2])]
                    _, boxes, valid = pad_objects(central, cfg.m_max)
                    s.central_boxes = boxes
                    s.central_valid = valid
            samples.append(s)
        return samples

    return LoadedData(
        train=load_split(cfg.train_path, cfg.train_frames, "train"),
        val=load_split(cfg.val_path, cfg.val_frames, "val"),
        vocab=vocab,
        labels=labels,
    )


def build_data(cfg, root: RngStream, needs: BatchNeeds) -> LoadedData:
    if cfg.synthetic:
        return build_synthetic_data(cfg, root, needs)
    return load_file_data(cfg, needs)


def collate_batch(
    samples: list[Sample],
    n_frames: int,
    m_max: int,
    mode: str,
    needs: BatchNeeds,
    rng: RngStream | None = None,
) -> dict:
    batch = collate_videos([s.video for s in samples], n_frames, m_max, mode, rng)
    if needs.app_frames:
        missing = [s.video.id for s in samples if s.app_frames is None]
        if missing:
            raise DataError(f"samples lack cached appearance frames: {missing[:3]}")
        batch["app_frames"] = frames_to_input(np.stack([s.app_frames for s in samples]))
    if needs.pixel_frames:
        missing = [s.video.id for s in samples if s.all_frames is None]
        if missing:
            raise DataError(f"samples lack cached per-frame pixels: {missing[:3]}")
        picked = [
            s.all_frames[batch["frame_indices"][i]] for i, s in enumerate(samples)
        ]
        batch["pixel_frames"] = frames_to_input(np.stack(picked))
    if needs.central_boxes:
        batch["central_boxes"] = np.stack([s.central_boxes for s in samples])
        batch["central_valid"] = np.stack([s.central_valid for s in samples])
    return batch
