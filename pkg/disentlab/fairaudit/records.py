"""Per-sample predictions, the input to every fairness metric."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from disentlab._types import MISSING, SA_NAMES


@dataclass(frozen=True)
class PredictionRecord:
    """One scored sample.

    ``sa`` maps each of the five SA names to its group id, ``-1`` if unknown.
    """

    image_id: str
    patient_id: str
    y_true: int
    score: float
    y_hat: int
    sa: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"Score must lie in [0, 1], got {self.score}.")
        missing = [name for name in SA_NAMES if name not in self.sa]
        if missing:
            raise ValueError(f"Record {self.image_id} lacks SA values for {missing}.")


PREDICTION_COLUMNS: tuple[str, ...] = (
    "image_id",
    "patient_id",
    "y_true",
    "score",
    "y_hat",
    *SA_NAMES,
)


def records_to_frame(records: Sequence[PredictionRecord]) -> pd.DataFrame:
    """Columnar view with one int64 column per SA (``-1`` = missing)."""
    frame = pd.DataFrame(
        {
            "image_id": [r.image_id for r in records],
            "patient_id": [r.patient_id for r in records],
            "y_true": np.array([r.y_true for r in records], dtype=np.int64),
            "score": np.array([r.score for r in records], dtype=np.float64),
            "y_hat": np.array([r.y_hat for r in records], dtype=np.int64),
        }
    )
    for name in SA_NAMES:
        frame[name] = np.array(
            [r.sa.get(name, MISSING) for r in records], dtype=np.int64
        )
    return frame


def frame_to_records(frame: pd.DataFrame) -> list[PredictionRecord]:
    out = []
    for row in frame.itertuples(index=False):
        values = row._asdict()
        out.append(
            PredictionRecord(
                image_id=str(values["image_id"]),
                patient_id=str(values["patient_id"]),
                y_true=int(values["y_true"]),
                score=float(values["score"]),
                y_hat=int(values["y_hat"]),
                sa={name: int(values[name]) for name in SA_NAMES},
            )
        )
    return out
