"""Patient-level train/val/test split stratified on DR status."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from disentlab.errors import DataError
from disentlab.synthgen.dataset import Dataset, SplitAssignment

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "val", "test")


def _largest_remainder(total: int, fractions: Sequence[float]) -> np.ndarray:
    raw = total * np.asarray(fractions, dtype=np.float64)
    counts = np.floor(raw + 1e-9).astype(np.int64)
    short = total - int(counts.sum())
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def split_dataset(
    dataset: Dataset,
    fractions: Sequence[float] = (0.7, 0.1, 0.2),
    seed: int = 0,
) -> SplitAssignment:
    """Assign every patient to exactly one of train, val and test.

    Patient counts per split are the largest-remainder rounding of
    ``n_patients * fractions``. Within those counts the number of DR-positive
    patients per split is rounded the same way from the positive total, so
    each split's prevalence tracks the overall one.

    Raises
    ------
    DataError
        If the dataset is empty or a split would receive no patients.
    ValueError
        If *fractions* are negative or do not sum to 1.
    """
    if len(fractions) != 3:
        raise ValueError(f"Expected three split fractions, got {len(fractions)}.")
    if any(f < 0 for f in fractions) or not np.isclose(sum(fractions), 1.0):
        raise ValueError(
            "Split fractions must be non-negative and sum to 1, "
            f"got {tuple(fractions)}."
        )
    if len(dataset) == 0:
        raise DataError("Cannot split an empty dataset.")

    patients = dataset.patient_table()
    n = len(patients)
    sizes = _largest_remainder(n, fractions)
    if (sizes == 0).any():
        empty = [name for name, size in zip(SPLIT_NAMES, sizes) if size == 0]
        raise DataError(
            f"Split(s) {', '.join(empty)} would be empty with {n} patients and "
            f"fractions {tuple(fractions)}. Generate more patients or raise those "
            f"fractions."
        )

    ids = patients["patient_id"].to_numpy(dtype=object)
    positive = patients["dr"].to_numpy() == 1
    n_pos = int(positive.sum())
    pos_sizes = np.minimum(_largest_remainder(n_pos, fractions), sizes)
    # Rounding the two strata separately can overshoot one split's total.
    deficit = n_pos - int(pos_sizes.sum())
    for k in np.argsort(-(sizes - pos_sizes), kind="stable"):
        take = min(deficit, int(sizes[k] - pos_sizes[k]))
        pos_sizes[k] += take
        deficit -= take
    neg_sizes = sizes - pos_sizes

    rng = np.random.default_rng(seed)
    pos_ids = ids[positive][rng.permutation(n_pos)]
    neg_ids = ids[~positive][rng.permutation(n - n_pos)]
    pos_cuts = np.cumsum(pos_sizes)[:-1]
    neg_cuts = np.cumsum(neg_sizes)[:-1]
    parts = {
        name: frozenset(p.tolist()) | frozenset(q.tolist())
        for name, p, q in zip(
            SPLIT_NAMES, np.split(pos_ids, pos_cuts), np.split(neg_ids, neg_cuts)
        )
    }
    logger.info(
        "Split %d patients into train/val/test = %d/%d/%d",
        n,
        len(parts["train"]),
        len(parts["val"]),
        len(parts["test"]),
    )
    return SplitAssignment(**parts)


def split_prevalence(dataset: Dataset, splits: SplitAssignment) -> dict[str, float]:
    """Patient-level DR prevalence per split."""
    patients = dataset.patient_table().set_index("patient_id")["dr"]
    out: dict[str, float] = {}
    for name in SPLIT_NAMES:
        members = list(getattr(splits, name))
        out[name] = float(patients.loc[members].mean()) if members else float("nan")
    return out
