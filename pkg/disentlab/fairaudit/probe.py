"""Linear leakage probes: how well an SA can be read off feature vectors."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import GroupShuffleSplit
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from disentlab._types import MISSING
from disentlab.errors import DataError, UndefinedMetricError
from disentlab.fairaudit.metrics import auroc, balanced_accuracy

logger = logging.getLogger(__name__)

MIN_PER_CLASS = 20
# Fraction of groups (patients) held out for scoring.
TEST_FRACTION = 0.3
PROBE_MAX_ITER = 2000


@dataclass(frozen=True)
class ProbeResult:
    sa: str
    auroc: float
    balanced_accuracy: float | None
    n_train: int
    n_test: int


def _held_out_split(
    y: np.ndarray, groups: np.ndarray, split_seed: int
) -> tuple[np.ndarray, np.ndarray]:
    splitter = GroupShuffleSplit(
        n_splits=1, test_size=TEST_FRACTION, random_state=int(split_seed) % 2**32
    )
    train_idx, test_idx = next(splitter.split(np.zeros(y.size), y, groups))
    return train_idx, test_idx


def _fit_probe(
    features: np.ndarray,
    labels: np.ndarray,
    split_seed: int,
    sa: str = "",
    groups: np.ndarray | None = None,
) -> ProbeResult:
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).ravel()
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ValueError(
            f"Features must be [N, D] with one label per row, "
            f"got {x.shape} and {y.size}."
        )
    what = f"Leakage probe{f' for {sa}' if sa else ''}"
    bad = np.setdiff1d(np.unique(y), [0, 1])
    if bad.size:
        raise DataError(
            f"{what} takes 0/1 labels, got {bad.tolist()}. Drop rows with a "
            f"missing value ({MISSING}) first."
        )
    counts = np.bincount(y, minlength=2)
    if counts.min() < MIN_PER_CLASS:
        raise DataError(
            f"{what} needs at least {MIN_PER_CLASS} samples per class, "
            f"got class counts {counts.tolist()}."
        )
    if groups is None:
        groups = np.arange(y.size)
    groups = np.asarray(groups).ravel()
    if groups.size != y.size:
        raise ValueError(f"Expected {y.size} group ids, got {groups.size}.")
    train_idx, test_idx = _held_out_split(y, groups, split_seed)
    y_train, y_test = y[train_idx], y[test_idx]
    if np.unique(y_train).size < 2 or np.unique(y_test).size < 2:
        raise DataError(
            f"{what}: a patient-grouped split left one side with a single class."
        )
    model = make_pipeline(
        StandardScaler(), LogisticRegression(max_iter=PROBE_MAX_ITER)
    )
    model.fit(x[train_idx], y_train)
    scores = model.predict_proba(x[test_idx])[:, 1]
    try:
        ba: float | None = balanced_accuracy(model.predict(x[test_idx]), y_test)
    except UndefinedMetricError:
        ba = None
    return ProbeResult(
        sa=sa,
        auroc=auroc(scores, y_test),
        balanced_accuracy=ba,
        n_train=int(train_idx.size),
        n_test=int(test_idx.size),
    )


def probe_leakage(
    features: np.ndarray,
    sa_labels: np.ndarray,
    split_seed: int = 0,
    groups: np.ndarray | None = None,
) -> float:
    """Held-out AUROC of a logistic probe predicting *sa_labels* from *features*.

    The probe is fit on 70% of the groups and scored on the other 30%; the
    split is fixed by *split_seed*. Rows sharing a *groups* id (a patient's
    images) always land on the same side. Without *groups* every row is its
    own group.

    Raises
    ------
    DataError
        If a label is not 0/1, either class has fewer than 20 samples, or the
        grouped split leaves a side with one class.
    """
    return _fit_probe(features, sa_labels, split_seed, groups=groups).auroc


def probe_all_sas(
    features: np.ndarray,
    sa_table: Mapping[str, np.ndarray],
    split_seed: int = 0,
    groups: np.ndarray | None = None,
) -> list[ProbeResult]:
    """Probe every SA in *sa_table*; rows with a missing value are dropped.

    SAs that cannot be probed (too few samples in a class) are skipped with
    a warning.
    """
    results = []
    for name, values in sa_table.items():
        labels = np.asarray(values, dtype=np.int64)
        keep = labels != MISSING
        kept_groups = None if groups is None else np.asarray(groups)[keep]
        try:
            results.append(
                _fit_probe(features[keep], labels[keep], split_seed, name, kept_groups)
            )
        except DataError as exc:
            logger.warning("Skipping probe: %s", exc)
    return results
