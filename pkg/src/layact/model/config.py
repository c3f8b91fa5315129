"""Layout-model configuration."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class StltConfig:
    vocab_size: int
    num_actions: int
    width: int = 128
    spatial_layers: int = 2
    spatial_heads: int = 4
    temporal_layers: int = 2
    temporal_heads: int = 4
    dropout: float = 0.1
    m_max: int = 7
    frames: int = 16
    ff_mult: int = 4

    def __post_init__(self):
        if self.width % self.spatial_heads != 0:
            raise ConfigError(
                f"width {self.width} not divisible by spatial heads {self.spatial_heads}"
            )
        if self.width % self.temporal_heads != 0:
            raise ConfigError(
                f"width {self.width} not divisible by temporal heads {self.temporal_heads}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout {self.dropout} must be in [0, 1)")
        if self.vocab_size < 3 or self.num_actions < 2:
            raise ConfigError("need at least one real category and two actions")
        if self.m_max < 1 or self.frames < 1:
            raise ConfigError("m_max and frames must be positive")

    @property
    def num_positions(self) -> int:
        # frame positions 0..n-1, class position n, plus one spare slot for
        # fusion schemes that shift frames by a prepended video token
        return self.frames + 2
