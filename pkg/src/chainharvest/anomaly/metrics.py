"""Cross-method agreement metrics: confusion matrix, agreement rates, overlap."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


class LengthMismatch(Exception):
    pass


class EmptyReference(Exception):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """k x k counts; rows are classifier A labels, columns classifier B."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (c < 0).any():
            raise ValueError("confusion counts must be non-negative")

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def overall_agreement(self) -> float:
        """Diagonal mass over total: the fraction labeled identically."""
        total = self.total
        return self.trace / total if total else 0.0

    def column_recalls(self) -> list[Optional[float]]:
        """Per-column diagonal share; None for empty columns."""
        sums = self.counts.sum(axis=0)
        return [
            (int(self.counts[j, j]) / int(sums[j])) if sums[j] > 0 else None
            for j in range(self.k)
        ]

    def macro_agreement(self) -> float:
        """Mean of the column recalls, skipping empty columns."""
        recalls = [r for r in self.column_recalls() if r is not None]
        return sum(recalls) / len(recalls) if recalls else 0.0

    def to_lists(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.counts]


def confusion_and_agreement(
    a_labels: Sequence[int], b_labels: Sequence[int], k: int
) -> tuple[ConfusionMatrix, float, float]:
    """Count label co-occurrences and report both agreement statistics.

    overall is trace/total; macro averages each column's diagonal share
    (empty columns skipped). Labels must lie in [0, k).
    """
    a = np.asarray(a_labels, dtype=int)
    b = np.asarray(b_labels, dtype=int)
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.shape[0]} vs {b.shape[0]} labels")
    if a.size and (a.min() < 0 or a.max() >= k or b.min() < 0 or b.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (a, b), 1)
    cm = ConfusionMatrix(counts)
    return cm, cm.overall_agreement(), cm.macro_agreement()


def overlap_rate(set_a: Iterable, set_b: Iterable) -> float:
    """|A intersect B| / |A|; the reference set A must be non-empty."""
    a, b = set(set_a), set(set_b)
    if not a:
        raise EmptyReference("reference set is empty")
    return len(a & b) / len(a)
