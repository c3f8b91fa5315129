"""Uniform wrapper over the trainable model kinds.

A bundle packages configs plus weights for one of: the layout transformer
(stlt), its joint single-stack variant, the appearance-only model, or a
fusion model. It exposes forward/loss, parameter listing and freezing, and
checkpoint (de)serialization. Branch weights are initialized from the same
named streams in every kind, so a fusion model's branches start bit-identical
to the standalone models for the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine.checkpoint import load_container, save_container
from ..engine.params import linear, linear_init, named_parameters, parameter_hash
from ..engine.rng import RngStream
from ..engine.tensor import Tensor, binary_cross_entropy, cross_entropy, tensor
from ..errors import ConfigError, DataError
from ..fusion.appearance import appearance_forward, init_appearance_weights
from ..fusion.config import AppearanceConfig, FusionConfig
from ..fusion.schemes import cacnf_loss, fusion_forward, init_fusion_weights
from ..model.config import StltConfig
from ..model.stlt import (
    init_joint_weights,
    init_stlt_weights,
    stlt_forward,
    stlt_joint_forward,
)

CHECKPOINT_KINDS = ("stlt", "stlt_joint", "appearance", "fusion")


@dataclass
class ModelBundle:
    kind: str
    stlt_cfg: StltConfig | None
    app_cfg: AppearanceConfig | None
    fus_cfg: FusionConfig
    weights: object
    multi_label: bool = False
    actions: tuple[str, ...] = ()
    categories: tuple[str, ...] = ()

    # -- construction ------------------------------------------------------

    @classmethod
    def build(
        cls,
        train_cfg,
        vocab_size: int,
        num_actions: int,
        root: RngStream,
        actions=(),
        categories=(),
    ) -> "ModelBundle":
        stlt_cfg = StltConfig(
            vocab_size=vocab_size,
            num_actions=num_actions,
            width=train_cfg.width,
            spatial_layers=train_cfg.spatial_layers,
            spatial_heads=train_cfg.spatial_heads,
            temporal_layers=train_cfg.temporal_layers,
            temporal_heads=train_cfg.temporal_heads,
            dropout=train_cfg.model_dropout,
            m_max=train_cfg.m_max,
            frames=train_cfg.n_frames,
            ff_mult=train_cfg.ff_mult,
        )
        app_cfg = AppearanceConfig(
            d_a=train_cfg.d_a,
            resolution=train_cfg.resolution,
            frames=train_cfg.appearance_frames,
        )
        fus_cfg = FusionConfig(
            scheme=train_cfg.scheme,
            d_a=train_cfg.d_a,
            cross_layers=train_cfg.cross_layers,
            cross_heads=train_cfg.cross_heads,
            lambda_layout=train_cfg.lambda_layout,
            lambda_app=train_cfg.lambda_app,
        )
        multi = train_cfg.task == "multi"
        common = dict(multi_label=multi, actions=tuple(actions), categories=tuple(categories))
        if fus_cfg.scheme != "none":
            weights = init_fusion_weights(stlt_cfg, app_cfg, fus_cfg, root)
            return cls("fusion", stlt_cfg, app_cfg, fus_cfg, weights, **common)
        if train_cfg.model == "stlt":
            weights = init_stlt_weights(stlt_cfg, root.child("init/stlt"))
            return cls("stlt", stlt_cfg, None, fus_cfg, weights, **common)
        if train_cfg.model == "stlt_joint":
            weights = init_joint_weights(stlt_cfg, root.child("init/joint"))
            return cls("stlt_joint", stlt_cfg, None, fus_cfg, weights, **common)
        if train_cfg.model == "appearance":
            weights = init_appearance_weights(app_cfg, num_actions, root.child("init/appearance"))
            return cls("appearance", None, app_cfg, fus_cfg, weights, **common)
        raise ConfigError(f"unknown model kind {train_cfg.model!r}")

    # -- forward / loss ------------------------------------------------------

    def forward(self, batch: dict, training: bool = False, rng: RngStream | None = None) -> dict:
        if self.kind == "stlt":
            logits = stlt_forward(
                self.weights, self.stlt_cfg,
                batch["cats"], batch["boxes"], batch["mask"], training, rng,
            )
            return {"logits": logits}
        if self.kind == "stlt_joint":
            logits = stlt_joint_forward(
                self.weights, self.stlt_cfg,
                batch["cats"], batch["boxes"], batch["mask"], training, rng,
            )
            return {"logits": logits}
        if self.kind == "appearance":
            vec, _, _ = appearance_forward(self.weights, self.app_cfg, batch["app_frames"])
            return {"logits": linear(vec, self.weights.classifier)}
        return fusion_forward(
            self.weights, self.stlt_cfg, self.app_cfg, self.fus_cfg, batch, training, rng
        )

    def loss(self, out: dict, labels) -> Tensor:
        if self.fus_cfg.scheme == "cacnf":
            return cacnf_loss(
                out["logits"], out["layout_logits"], out["appearance_logits"],
                labels, self.fus_cfg.lambda_layout, self.fus_cfg.lambda_app,
                multi_label=self.multi_label,
            )
        if self.multi_label:
            return binary_cross_entropy(out["logits"], labels)
        return cross_entropy(out["logits"], labels)

    # -- parameters --------------------------------------------------------------

    def named_params(self) -> list[tuple[str, Tensor]]:
        return list(named_parameters(self.weights))

    def classifier_params(self) -> list[tuple[str, Tensor]]:
        return [(n, p) for n, p in self.named_params() if "classifier" in n]

    def backbone_params(self) -> list[tuple[str, Tensor]]:
        return [(n, p) for n, p in self.named_params() if "classifier" not in n]

    def backbone_hash(self) -> str:
        return parameter_hash(dict(self.backbone_params()))

    def freeze_backbone(self) -> None:
        for _, p in self.backbone_params():
            p.requires_grad = False
            p.grad = None

    @property
    def num_actions(self) -> int:
        if self.stlt_cfg is not None:
            return self.stlt_cfg.num_actions
        return self.weights.classifier.w.shape[1]

    def reinit_classifier(self, num_actions: int, stream: RngStream) -> None:
        """Replace every classifier head with a fresh one of the new size."""
        import dataclasses

        if self.kind in ("stlt", "stlt_joint"):
            d = self.stlt_cfg.width
            self.weights.classifier = linear_init(stream.child("classifier"), d, num_actions)
            self.stlt_cfg = dataclasses.replace(self.stlt_cfg, num_actions=num_actions)
        elif self.kind == "appearance":
            d = self.app_cfg.d_a
            self.weights.classifier = linear_init(stream.child("classifier"), d, num_actions)
        else:
            d = self.stlt_cfg.width
            da = self.app_cfg.d_a
            self.weights.stlt.classifier = linear_init(stream.child("stlt_classifier"), d, num_actions)
            self.weights.appearance.classifier = linear_init(
                stream.child("appearance_classifier"), da, num_actions
            )
            scheme = self.fus_cfg.scheme
            if scheme == "lcf":
                self.weights.lcf_classifier = linear_init(
                    stream.child("lcf_classifier"), d + da, num_actions
                )
            elif scheme == "vatf":
                self.weights.vatf_classifier = linear_init(
                    stream.child("vatf_classifier"), d, num_actions
                )
            elif scheme in ("caf", "cacnf"):
                self.weights.caf_classifier = linear_init(
                    stream.child("caf_classifier"), d + da, num_actions
                )
            self.stlt_cfg = dataclasses.replace(self.stlt_cfg, num_actions=num_actions)

    # -- checkpointing ----------------------------------------------------------------

    def checkpoint_meta(self) -> dict:
        import dataclasses

        return {
            "kind": self.kind,
            "multi_label": self.multi_label,
            "num_actions": self.num_actions,
            "actions": list(self.actions),
            "categories": list(self.categories),
            "stlt_cfg": dataclasses.asdict(self.stlt_cfg) if self.stlt_cfg else None,
            "app_cfg": dataclasses.asdict(self.app_cfg) if self.app_cfg else None,
            "fus_cfg": dataclasses.asdict(self.fus_cfg),
        }

    def save(self, path) -> None:
        entries = [(name, p.data) for name, p in self.named_params()]
        save_container(path, entries, self.checkpoint_meta())

    def load_state(self, entries: dict[str, np.ndarray]) -> None:
        params = dict(self.named_params())
        if set(params) != set(entries):
            missing = set(params) ^ set(entries)
            raise DataError(f"checkpoint parameter names do not match: {sorted(missing)[:6]}")
        for name, arr in entries.items():
            if params[name].data.shape != arr.shape:
                raise DataError(
                    f"checkpoint shape mismatch for {name}: "
                    f"{arr.shape} vs {params[name].data.shape}"
                )
            params[name].data = arr.copy()

    @classmethod
    def load(cls, path) -> "ModelBundle":
        meta, entries = load_container(path)
        if meta.get("kind") not in CHECKPOINT_KINDS:
            raise DataError(f"{path}: not a model checkpoint")
        stlt_cfg = StltConfig(**meta["stlt_cfg"]) if meta["stlt_cfg"] else None
        app_meta = meta["app_cfg"]
        if app_meta is not None:
            app_meta = dict(app_meta)
            app_meta["channels"] = tuple(app_meta["channels"])
        app_cfg = AppearanceConfig(**app_meta) if app_meta else None
        fus_cfg = FusionConfig(**meta["fus_cfg"])
        root = RngStream.from_seed(0, "checkpoint-load")
        kind = meta["kind"]
        if kind == "fusion":
            weights = init_fusion_weights(stlt_cfg, app_cfg, fus_cfg, root)
        elif kind == "stlt":
            weights = init_stlt_weights(stlt_cfg, root.child("init/stlt"))
        elif kind == "stlt_joint":
            weights = init_joint_weights(stlt_cfg, root.child("init/joint"))
        else:
            weights = init_appearance_weights(
                app_cfg, int(meta["num_actions"]), root.child("init/appearance")
            )
        bundle = cls(
            kind=kind,
            stlt_cfg=stlt_cfg,
            app_cfg=app_cfg,
            fus_cfg=fus_cfg,
            weights=weights,
            multi_label=bool(meta.get("multi_label")),
            actions=tuple(meta.get("actions", ())),
            categories=tuple(meta.get("categories", ())),
        )
        bundle.load_state(entries)
        return bundle
