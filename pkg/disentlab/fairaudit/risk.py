"""Per-class histograms of predicted risk."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from disentlab.fairaudit.records import PredictionRecord


@dataclass(frozen=True)
class RiskHistogram:
    """Counts of scores per bin for true Normal and true Referable samples.

    Bins are uniform over [0, 1], right-open except the last.
    """

    edges: np.ndarray
    counts_normal: np.ndarray
    counts_referable: np.ndarray

    @property
    def bins(self) -> int:
        return int(self.edges.size - 1)


def risk_distribution(
    records: Sequence[PredictionRecord], bins: int = 20
) -> RiskHistogram:
    if bins < 2:
        raise ValueError(f"Risk histograms need at least 2 bins, got {bins}.")
    scores = np.array([r.score for r in records], dtype=np.float64)
    labels = np.array([r.y_true for r in records], dtype=np.int64)
    edges = np.linspace(0.0, 1.0, bins + 1)
    normal, _ = np.histogram(scores[labels == 0], bins=edges)
    referable, _ = np.histogram(scores[labels == 1], bins=edges)
    return RiskHistogram(
        edges=edges,
        counts_normal=normal.astype(np.int64),
        counts_referable=referable.astype(np.int64),
    )
