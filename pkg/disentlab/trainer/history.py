"""Per-epoch training records."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

HISTORY_COLUMNS: tuple[str, ...] = (
    "epoch",
    "train_loss",
    "val_loss",
    "val_f1",
    "val_auroc",
    "noise_sigma",
    "is_best",
)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_f1: float
    val_auroc: float | None
    noise_sigma: float | None = None
    # Excluded from equality: the only non-reproducible field.
    wall_clock: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict[str, Any]:
        """Reproducible fields only; wall-clock time stays in the manifest."""
        data = asdict(self)
        data.pop("wall_clock")
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EpochRecord:
        return cls(**data)


@dataclass(frozen=True)
class TrainHistory:
    """Epoch records plus the restored best epoch and where training stopped.

    ``stopped_epoch`` is the last epoch run; ``early_stopped`` tells whether
    patience ran out before ``epochs_max``.
    """

    records: tuple[EpochRecord, ...]
    best_epoch: int
    stopped_epoch: int
    early_stopped: bool

    @property
    def best(self) -> EpochRecord:
        return self.records[self.best_epoch]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for record in self.records:
            row = record.to_dict()
            if row["val_auroc"] is None:
                row["val_auroc"] = math.nan
            row["noise_sigma"] = (
                math.nan if row["noise_sigma"] is None else row["noise_sigma"]
            )
            row["is_best"] = int(record.epoch == self.best_epoch)
            rows.append(row)
        return pd.DataFrame(rows, columns=list(HISTORY_COLUMNS))

    @property
    def wall_clock(self) -> float:
        return sum(r.wall_clock for r in self.records)


def write_history(history: TrainHistory, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    history.to_frame().to_csv(
        target, index=False, float_format="%.6g", na_rep="N/A", lineterminator="\n"
    )
    return target
