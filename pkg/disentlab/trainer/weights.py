"""Inverse-frequency class weights."""

from __future__ import annotations

import numpy as np

from disentlab._types import DR_CLASSES
from disentlab.errors import DataError


def compute_class_weights(
    labels: np.ndarray, n_classes: int = 2
) -> tuple[float, ...]:
    """``weight_c = N / (K * N_c)``, so a balanced split gets all ones.

    Raises
    ------
    DataError
        If the labels are empty or a class does not occur.
    """
    y = np.asarray(labels, dtype=np.int64).ravel()
    if y.size == 0:
        raise DataError("Cannot compute class weights from an empty training split.")
    counts = np.bincount(y, minlength=n_classes)
    absent = [c for c in range(n_classes) if counts[c] == 0]
    if absent:
        names = [DR_CLASSES[c] if n_classes == 2 else str(c) for c in absent]
        raise DataError(
            f"Class(es) {', '.join(names)} absent from the training split; "
            f"raise the prevalence or the number of patients."
        )
    return tuple(float(y.size / (n_classes * counts[c])) for c in range(n_classes))
