"""In-memory dataset: an image tensor plus a metadata table."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
import pandas as pd

from disentlab._types import SA_NAMES

META_COLUMNS: tuple[str, ...] = ("image_id", "patient_id", "dr", *SA_NAMES)


@dataclass(frozen=True)
class Sample:
    """One image with its labels."""

    image: np.ndarray  # [channels, size, size], float32 in [0, 1]
    dr_label: int
    sa: dict[str, int]  # -1 where the attribute is unknown
    patient_id: str
    image_id: str


@dataclass(frozen=True)
class SplitAssignment:
    """Patient-disjoint train/val/test partition."""

    train: frozenset[str]
    val: frozenset[str]
    test: frozenset[str]

    def part_of(self, patient_id: str) -> str:
        for name in ("train", "val", "test"):
            if patient_id in getattr(self, name):
                return name
        raise KeyError(f"Patient '{patient_id}' is not assigned to any split.")


class Dataset:
    """Images ``[N, C, H, W]`` (float32) aligned row-by-row with ``meta``.

    ``meta`` holds the columns of ``meta.csv``: ``image_id``, ``patient_id``,
    ``dr`` and one integer column per SA (``-1`` = missing), plus an optional
    ``split`` column.
    """

    def __init__(self, images: np.ndarray, meta: pd.DataFrame) -> None:
        if images.ndim != 4:
            raise ValueError(
                f"Images must be shaped [N, C, H, W], got shape {images.shape}."
            )
        if len(meta) != images.shape[0]:
            raise ValueError(
                f"Metadata has {len(meta)} rows but there are {images.shape[0]} images."
            )
        missing = [c for c in META_COLUMNS if c not in meta.columns]
        if missing:
            raise ValueError(f"Metadata is missing columns: {', '.join(missing)}.")
        self.images = np.ascontiguousarray(images, dtype=np.float32)
        self.meta = meta.reset_index(drop=True)

    # -- basic protocol -------------------------------------------------------

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def __getitem__(self, index: int) -> Sample:
        row = self.meta.iloc[index]
        return Sample(
            image=self.images[index],
            dr_label=int(row["dr"]),
            sa={name: int(row[name]) for name in SA_NAMES},
            patient_id=str(row["patient_id"]),
            image_id=str(row["image_id"]),
        )

    def __repr__(self) -> str:
        n_patients = self.meta["patient_id"].nunique()
        return (
            f"Dataset(n={len(self)}, patients={n_patients}, "
            f"shape={self.image_shape})"
        )

    @property
    def image_shape(self) -> tuple[int, int, int]:
        _, c, h, w = self.images.shape
        return (int(c), int(h), int(w))

    # -- column access --------------------------------------------------------

    @property
    def dr(self) -> np.ndarray:
        return self.meta["dr"].to_numpy(dtype=np.int64)

    def sa(self, name: str) -> np.ndarray:
        """Group ids for one SA, ``-1`` where missing."""
        return self.meta[name].to_numpy(dtype=np.int64)

    @property
    def patient_ids(self) -> np.ndarray:
        return self.meta["patient_id"].to_numpy(dtype=object)

    def patient_table(self) -> pd.DataFrame:
        """One row per patient (first image), in order of first appearance."""
        return self.meta.drop_duplicates("patient_id", keep="first").reset_index(
            drop=True
        )

    # -- derived datasets -----------------------------------------------------

    def subset(self, indices: Iterable[int] | np.ndarray) -> Dataset:
        if not isinstance(indices, np.ndarray):
            indices = list(indices)
        idx = np.asarray(indices)
        idx = idx.astype(np.int64)
        return Dataset(self.images[idx], self.meta.iloc[idx].reset_index(drop=True))

    def for_patients(self, patients: Iterable[str]) -> Dataset:
        """Rows belonging to *patients*, in dataset order."""
        wanted = set(patients)
        mask = self.meta["patient_id"].isin(wanted).to_numpy()
        return self.subset(np.flatnonzero(mask))

    def with_splits(self, splits: SplitAssignment) -> Dataset:
        """Copy with the ``split`` column filled from *splits*."""
        meta = self.meta.copy()
        meta["split"] = [splits.part_of(p) for p in meta["patient_id"]]
        return Dataset(self.images, meta)

    def splits(self) -> SplitAssignment | None:
        """Read the assignment back from the ``split`` column, if present."""
        if "split" not in self.meta.columns:
            return None
        groups = {
            name: frozenset(self.meta.loc[self.meta["split"] == name, "patient_id"])
            for name in ("train", "val", "test")
        }
        return SplitAssignment(**groups)

    def equals(self, other: Dataset) -> bool:
        """Field-by-field equality, bit-exact on pixels."""
        return (
            np.array_equal(self.images, other.images)
            and self.images.dtype == other.images.dtype
            and self.meta.equals(other.meta)
        )
