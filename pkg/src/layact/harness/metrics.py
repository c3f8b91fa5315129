"""Evaluation metrics: top-k accuracy, mean average precision, ensembling."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError


def evaluate_topk(logits: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Fraction of rows whose label ranks among the k largest logits.

    Ties are broken toward the lower class index (stable sort on negated
    scores), so results are deterministic.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    if not 1 <= k <= c:
        raise ConfigError(f"k={k} outside 1..{c}")
    if labels.shape != (n,):
        raise ConfigError(f"labels shape {labels.shape} does not match logits {logits.shape}")
    if np.any(labels < 0) or np.any(labels >= c):
        raise DataError("label index out of range")
    order = np.argsort(-logits, axis=1, kind="stable")[:, :k]
    hits = (order == labels[:, None]).any(axis=1)
    return float(hits.mean())


def average_precision(scores: np.ndarray, positives: np.ndarray) -> float:
    """AP of one class: precision averaged at each positive's rank.

    Ranking ties are broken by sample index (stable descending sort).
    """
    order = np.lexsort((np.arange(len(scores)), -scores))
    pos_sorted = positives[order].astype(bool)
    cum_hits = np.cumsum(pos_sorted)
    ranks = np.arange(1, len(scores) + 1)
    precisions = cum_hits[pos_sorted] / ranks[pos_sorted]
    return float(precisions.mean())


def evaluate_map(scores: np.ndarray, labels: np.ndarray) -> tuple[float, list[int]]:
    """Mean average precision over classes with at least one positive.

    Returns (mAP, skipped_class_indices); classes without positives are
    skipped and reported. An all-zero label matrix is an error.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape:
        raise ConfigError(f"scores {scores.shape} and labels {labels.shape} differ")
    if not np.all((labels == 0) | (labels == 1)):
        raise DataError("labels must be a multi-hot 0/1 matrix")
    if not labels.any():
        raise DataError("label matrix has no positives in any class")
    aps = []
    skipped = []
    for c in range(scores.shape[1]):
        if labels[:, c].sum() == 0:
            skipped.append(c)
            continue
        aps.append(average_precision(scores[:, c], labels[:, c]))
    return float(np.mean(aps)), skipped


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def ensemble(scores_a: np.ndarray, scores_b: np.ndarray, mode: str) -> np.ndarray:
    """Average normalized class scores of two models.

    single-label: mean of row-softmaxed scores; multi-label: mean of
    per-class sigmoid scores.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"score shapes differ: {a.shape} vs {b.shape}")
    if mode == "single":
        return 0.5 * (_softmax_rows(a) + _softmax_rows(b))
    if mode == "multi":
        return 0.5 * (_sigmoid(a) + _sigmoid(b))
    raise ConfigError(f"unknown ensemble mode {mode!r}")
