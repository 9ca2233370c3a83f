"""Binary classification metrics: AUROC, confusion counts, BA, F1, bootstrap CIs."""

from __future__ import annotations

import logging

import numpy as np
from scipy.stats import rankdata

from disentlab._types import Confusion
from disentlab.errors import DataError, UndefinedMetricError

logger = logging.getLogger(__name__)


def _binary(values: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values).astype(np.int64).ravel()
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{what} must be 0/1, got values {sorted(set(arr.tolist()))}.")
    return arr


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUROC: ``P(score+ > score-) + 0.5 * P(tie)``.

    Raises
    ------
    UndefinedMetricError
        If only one class is present.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = _binary(labels, "Labels")
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores but {y.size} labels.")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"AUROC is undefined with {n_pos} positive and {n_neg} negative samples; "
            f"both classes are required."
        )
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def confusion(y_hat: np.ndarray, y_true: np.ndarray) -> Confusion:
    p = _binary(y_hat, "Predictions")
    t = _binary(y_true, "Labels")
    if p.shape != t.shape:
        raise ValueError(f"{p.size} predictions but {t.size} labels.")
    return Confusion(
        tp=int(((p == 1) & (t == 1)).sum()),
        fp=int(((p == 1) & (t == 0)).sum()),
        fn=int(((p == 0) & (t == 1)).sum()),
        tn=int(((p == 0) & (t == 0)).sum()),
    )


def balanced_accuracy_from(c: Confusion) -> float:
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        raise UndefinedMetricError(
            "Balanced accuracy needs both classes among the true labels."
        )
    return (c.tp / (c.tp + c.fn) + c.tn / (c.tn + c.fp)) / 2.0


def f1_from(c: Confusion) -> float:
    denominator = 2 * c.tp + c.fp + c.fn
    return 2 * c.tp / denominator if denominator else 0.0


def balanced_accuracy(y_hat: np.ndarray, y_true: np.ndarray) -> float:
    """``(TPR + TNR) / 2``.

    Raises
    ------
    DataError
        On empty input.
    UndefinedMetricError
        If one class is absent from *y_true*.
    """
    c = confusion(y_hat, y_true)
    if c.n == 0:
        raise DataError("Balanced accuracy of an empty sample is undefined.")
    return balanced_accuracy_from(c)


def f1(y_hat: np.ndarray, y_true: np.ndarray) -> float:
    """``2TP / (2TP + FP + FN)``; 0 when there are no positives at all."""
    c = confusion(y_hat, y_true)
    if c.n == 0:
        raise DataError("F1 of an empty sample is undefined.")
    return f1_from(c)


def rate(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


# ---------------------------------------------------------------------------
# Bootstrap
# ---------------------------------------------------------------------------


def bootstrap_auroc_ci(
    scores: np.ndarray,
    labels: np.ndarray,
    clusters: np.ndarray,
    resamples: int = 1000,
    seed: int = 0,
    level: float = 0.95,
) -> tuple[float, float] | None:
    """Percentile interval of AUROC under resampling of whole clusters (patients).

    Resample ``b`` uses ``default_rng([seed, b])``, so intervals do not depend
    on evaluation order. Resamples with a single class are skipped; None is
    returned when fewer than two remain.
    """
    if resamples == 0:
        return None
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    keys = np.asarray(clusters, dtype=object).astype(str)
    _, cluster_index = np.unique(keys, return_inverse=True)
    n_clusters = int(cluster_index.max()) + 1 if cluster_index.size else 0
    if n_clusters == 0:
        return None
    order = np.argsort(cluster_index, kind="stable")
    starts = np.searchsorted(cluster_index[order], np.arange(n_clusters + 1))
    members = [order[starts[k] : starts[k + 1]] for k in range(n_clusters)]

    values = []
    skipped = 0
    for b in range(resamples):
        rng = np.random.default_rng([seed, b])
        drawn = rng.integers(0, n_clusters, size=n_clusters)
        idx = np.concatenate([members[k] for k in drawn])
        try:
            values.append(auroc(s[idx], y[idx]))
        except UndefinedMetricError:
            skipped += 1
    if skipped:
        logger.warning(
            "Skipped %d/%d single-class bootstrap resamples", skipped, resamples
        )
    if len(values) < 2:
        return None
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(np.asarray(values), [alpha, 1.0 - alpha])
    return float(low), float(high)
