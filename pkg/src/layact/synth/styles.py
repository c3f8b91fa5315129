"""Object rendering styles for the synthetic benchmark.

A style fully determines how a box is painted: shape, fill color, and a
texture accent. Disjoint style pools between train and test splits carry
the compositional shift; hues are spaced so pools never share colors.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

SHAPES = ("rectangle", "ellipse", "triangle", "cross")
SIZE_PRIORS = (0.10, 0.14, 0.18)


@dataclass(frozen=True)
class ObjectStyle:
    style_id: int
    shape: str
    color: tuple[float, float, float]  # RGB in [0, 1]
    texture_seed: int
    size_prior: float


def make_style_pool(count: int) -> list[ObjectStyle]:
    """Deterministic pool of visually distinct styles."""
    styles = []
    for i in range(count):
        hue = i / count
        sat = 0.85 if i % 2 == 0 else 0.6
        val = 0.95 if i % 3 != 1 else 0.7
        color = colorsys.hsv_to_rgb(hue, sat, val)
        styles.append(
            ObjectStyle(
                style_id=i,
                shape=SHAPES[i % len(SHAPES)],
                color=tuple(round(c, 6) for c in color),
                texture_seed=i * 7919 + 13,
                size_prior=SIZE_PRIORS[i % len(SIZE_PRIORS)],
            )
        )
    return styles
