"""Run configuration: a flat, typed key-value format.

Config files contain one `key = value` pair per line; `#` starts a comment.
Every key is declared in the registry below with a type and default, so
unknown keys and malformed values fail loudly. Each run writes its resolved
configuration next to its outputs; its SHA-256 is the run's config hash.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError
from ..fusion.config import FUSION_SCHEMES


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


@dataclass(frozen=True)
class Key:
    name: str
    type: str  # int | float | str | bool
    default: object
    help: str
    choices: tuple | None = None


KEY_REGISTRY: dict[str, Key] = {}


def _key(name, type_, default, help_, choices=None):
    KEY_REGISTRY[name] = Key(name, type_, default, help_, choices)


_key("seed", "int", None, "run seed; mandatory, fully determines the run")
_key("task", "str", "single", "label mode", ("single", "multi"))
_key("model", "str", "stlt", "base model kind", ("stlt", "stlt_joint", "appearance"))
_key("scheme", "str", "none", "fusion scheme", FUSION_SCHEMES)
_key("epochs", "int", 30, "maximum training epochs")
_key("batch_size", "int", 32, "videos per training step")
_key("lr", "float", 1e-3, "optimizer learning rate")
_key("patience", "int", 10, "early-stopping patience on the validation metric")
_key("out_dir", "str", "runs/run", "output directory for checkpoints and reports")

_key("n_frames", "int", 16, "layout frames sampled per video")
_key("m_max", "int", 7, "object slots per frame (incl. padding)")
_key("width", "int", 128, "layout model width")
_key("spatial_layers", "int", 2, "spatial transformer depth")
_key("spatial_heads", "int", 4, "spatial attention heads")
_key("temporal_layers", "int", 2, "temporal transformer depth")
_key("temporal_heads", "int", 4, "temporal attention heads")
_key("model_dropout", "float", 0.1, "dropout rate in the layout model")
_key("ff_mult", "int", 4, "feed-forward expansion factor")

_key("appearance_frames", "int", 32, "RGB frames sampled per video (T')")
_key("resolution", "int", 112, "rendered / ingested frame resolution")
_key("d_a", "int", 64, "appearance feature width")
_key("cross_layers", "int", 2, "cross-attention fusion depth")
_key("cross_heads", "int", 4, "cross-attention heads")
_key("lambda_layout", "float", 0.5, "layout branch loss weight (cacnf)")
_key("lambda_app", "float", 0.5, "appearance branch loss weight (cacnf)")

_key("synthetic", "bool", True, "generate data procedurally (else load files)")
_key("synthetic_kind", "str", "compositional", "split kind", ("compositional", "fewshot"))
_key("synthetic_train_per_action", "int", 20, "train videos per action")
_key("synthetic_test_per_action", "int", 10, "test videos per action")
_key("synthetic_styles", "int", 16, "style pool size (split half train/half test)")
_key("synthetic_length", "int", 24, "source frames per generated video (T)")
_key("synthetic_bias", "float", 0.8, "style-action correlation in the train split")
_key("synthetic_corrupt", "float", 0.0, "layout category corruption rate")
_key("synthetic_base_actions", "str", "", "comma-separated base actions (fewshot)")
_key("synthetic_novel_actions", "str", "", "comma-separated novel actions (fewshot)")
_key("synthetic_shots", "int", 5, "fine-tuning videos per novel action (fewshot)")
_key("synthetic_multi_label", "bool", False, "two simultaneous actions per video")

_key("train_path", "str", "", "JSON-lines annotations for training (file mode)")
_key("val_path", "str", "", "JSON-lines annotations for validation (file mode)")
_key("train_frames", "str", "", "frames archive for training videos (file mode)")
_key("val_frames", "str", "", "frames archive for validation videos (file mode)")
_key("categories", "str", "", "comma-separated category names (file mode)")
_key("actions", "str", "", "comma-separated action names (file mode)")
_key("oracle", "bool", True, "ingest all boxes (off: threshold by detector score)")
_key("score_threshold", "float", 0.5, "detector-score cutoff in predictions mode")


@dataclass
class TrainConfig:
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    @classmethod
    def from_dict(cls, overrides: dict) -> "TrainConfig":
        values = {}
        for name, key in KEY_REGISTRY.items():
            values[name] = key.default
        for name, raw in overrides.items():
            if name not in KEY_REGISTRY:
                raise ConfigError(f"unknown config key {name!r}")
            values[name] = _coerce(KEY_REGISTRY[name], raw)
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        overrides = {}
        text = Path(path).read_text()
        for line_no, line in enumerate(text.splitlines(), 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            name, raw = (part.strip() for part in stripped.split("=", 1))
            if name in overrides:
                raise ConfigError(f"{path}:{line_no}: duplicate key {name!r}")
            overrides[name] = raw
        return cls.from_dict(overrides)

    def validate(self) -> None:
        if self.values.get("seed") is None:
            raise ConfigError("config key 'seed' is mandatory")
        if self.values["model"] == "appearance" and self.values["scheme"] != "none":
            raise ConfigError("fusion schemes require the layout model")
        if self.values["task"] == "multi" and not self.values["synthetic_multi_label"] and self.values["synthetic"]:
            raise ConfigError("multi-label task needs synthetic_multi_label = true")
        if not self.values["synthetic"]:
            for key in ("train_path", "val_path"):
                p = self.values[key]
                if not p:
                    raise ConfigError(f"file mode needs {key}")
                if not Path(p).exists():
                    raise ConfigError(f"{key} does not exist: {p}")
            for key in ("train_frames", "val_frames"):
                p = self.values[key]
                if p and not Path(p).exists():
                    raise ConfigError(f"{key} does not exist: {p}")
            if not self.values["actions"]:
                raise ConfigError("file mode needs an 'actions' list")

    def resolved_text(self) -> str:
        lines = [f"{name} = {_format(self.values[name])}" for name in sorted(KEY_REGISTRY)]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.resolved_text().encode()).hexdigest()

    def replace(self, **overrides) -> "TrainConfig":
        merged = dict(self.values)
        for name, value in overrides.items():
            if name not in KEY_REGISTRY:
                raise ConfigError(f"unknown config key {name!r}")
            merged[name] = value
        cfg = TrainConfig(merged)
        cfg.validate()
        return cfg


def _coerce(key: Key, raw):
    if not isinstance(raw, str):
        value = raw
    else:
        try:
            if key.type == "int":
                value = int(raw)
            elif key.type == "float":
                value = float(raw)
            elif key.type == "bool":
                value = _bool(raw)
            else:
                value = raw.strip()
        except ValueError as exc:
            raise ConfigError(f"config key {key.name!r}: {exc}") from None
    if key.type == "int" and not isinstance(value, (int,)):
        raise ConfigError(f"config key {key.name!r} expects an int, got {value!r}")
    if key.choices is not None and value not in key.choices:
        raise ConfigError(
            f"config key {key.name!r} must be one of {key.choices}, got {value!r}"
        )
    return value


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_reference() -> str:
    """Human-readable key listing for --help output."""
    lines = []
    for name in sorted(KEY_REGISTRY):
        key = KEY_REGISTRY[name]
        choice = f" {key.choices}" if key.choices else ""
        lines.append(f"  {name} ({key.type}, default {key.default!r}): {key.help}{choice}")
    return "\n".join(lines)
