"""Decision curve analysis: net benefit against the treat-all/none policies."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from disentlab.errors import DataError
from disentlab.fairaudit.records import PredictionRecord

# 0.01, 0.02, ..., 0.99
DEFAULT_THRESHOLDS: np.ndarray = np.arange(1, 100) / 100.0


@dataclass(frozen=True)
class DecisionCurve:
    thresholds: np.ndarray
    net_benefit_model: np.ndarray
    net_benefit_treat_all: np.ndarray
    net_benefit_treat_none: np.ndarray
    n: int
    prevalence: float


def net_benefit(
    scores: np.ndarray, labels: np.ndarray, thresholds: np.ndarray
) -> np.ndarray:
    """``TP(t)/N - FP(t)/N * t/(1-t)``, treating samples with ``score > t``."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n = s.size
    treated = s[None, :] > thresholds[:, None]
    tp = (treated & (y[None, :] == 1)).sum(axis=1)
    fp = (treated & (y[None, :] == 0)).sum(axis=1)
    return tp / n - fp / n * thresholds / (1.0 - thresholds)


def decision_curve(
    records: Sequence[PredictionRecord],
    thresholds: Sequence[float] | np.ndarray | None = None,
) -> DecisionCurve:
    """Net-benefit curves of the model, treat-all and treat-none.

    Raises
    ------
    ValueError
        If a threshold lies outside (0, 1) or thresholds are not ascending.
    DataError
        If *records* is empty.
    """
    t = (
        DEFAULT_THRESHOLDS
        if thresholds is None
        else np.asarray(thresholds, dtype=np.float64)
    )
    if t.size == 0 or (t <= 0).any() or (t >= 1).any():
        raise ValueError("Decision-curve thresholds must lie strictly inside (0, 1).")
    if (np.diff(t) <= 0).any():
        raise ValueError("Decision-curve thresholds must be strictly ascending.")
    if not records:
        raise DataError("Cannot compute a decision curve without records.")
    scores = np.array([r.score for r in records], dtype=np.float64)
    labels = np.array([r.y_true for r in records], dtype=np.int64)
    n = labels.size
    prevalence = float(labels.mean())
    treat_all = prevalence - (1.0 - prevalence) * t / (1.0 - t)
    return DecisionCurve(
        thresholds=t,
        net_benefit_model=net_benefit(scores, labels, t),
        net_benefit_treat_all=treat_all,
        net_benefit_treat_none=np.zeros_like(t),
        n=n,
        prevalence=prevalence,
    )
