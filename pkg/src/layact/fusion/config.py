"""Fusion and appearance-branch configuration."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError

FUSION_SCHEMES = ("none", "pff", "pbf", "ef", "vatf", "lcf", "caf", "cacnf")


@dataclass(frozen=True)
class AppearanceConfig:
    """Toy video encoder: three strided space-time conv stages (16/32/64
    channels), a pooled head, and a patch-token sequence."""

    d_a: int = 64
    resolution: int = 112
    frames: int = 32  # T' uniformly sampled RGB frames
    token_temporal: int = 4
    token_spatial: int = 2
    heads: int = 4
    ff_mult: int = 2
    channels: tuple[int, int, int] = (16, 32, 64)

    def __post_init__(self):
        if self.resolution % 8 != 0 or (self.resolution // 8) % self.token_spatial != 0:
            raise ConfigError(
                f"resolution {self.resolution} must be divisible by "
                f"{8 * self.token_spatial} for three strided stages and token pooling"
            )
        if self.frames < 4 or self.frames % self.token_temporal != 0:
            raise ConfigError(
                f"appearance frames {self.frames} must be >= 4 and divisible by "
                f"{self.token_temporal}"
            )
        if self.d_a % self.heads != 0:
            raise ConfigError(f"d_a {self.d_a} not divisible by {self.heads} heads")

    @property
    def num_tokens(self) -> int:
        return self.token_temporal * self.token_spatial * self.token_spatial

    @property
    def map_size(self) -> int:
        return self.resolution // 8


@dataclass(frozen=True)
class FusionConfig:
    scheme: str = "none"
    d_a: int = 64
    cross_layers: int = 2
    cross_heads: int = 4
    lambda_layout: float = 0.5
    lambda_app: float = 0.5

    def __post_init__(self):
        if self.scheme not in FUSION_SCHEMES:
            raise ConfigError(
                f"unknown fusion scheme {self.scheme!r}; expected one of {FUSION_SCHEMES}"
            )
        if self.lambda_layout < 0 or self.lambda_app < 0:
            raise ConfigError("branch-loss weights must be non-negative")

    @property
    def needs_pixels(self) -> bool:
        return self.scheme != "none"
