"""layact: layout-based action recognition at desk scale.

Box-sequence transformers over object layouts, a toy appearance branch with
seven layout/appearance fusion schemes, a procedural layout-action benchmark
with compositional and few-shot splits, and a deterministic training and
evaluation harness.
"""

__version__ = "0.1.0"
