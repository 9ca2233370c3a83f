"""Shared constants and small value types used throughout disentlab."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

# Sensitive attributes, in the column order used by every file format.
SA_NAMES: tuple[str, ...] = ("age", "sex", "education", "insurance", "obesity")

SAName = Literal["age", "sex", "education", "insurance", "obesity"]

# Human-readable subgroup labels (group 0, group 1) for reports and plots.
SA_GROUP_LABELS: dict[str, tuple[str, str]] = {
    "age": ("<=50", ">50"),
    "sex": ("female", "male"),
    "education": ("literate", "illiterate"),
    "insurance": ("no insurance", "insured"),
    "obesity": ("non-obese", "obese"),
}

DR_CLASSES: tuple[str, str] = ("Normal", "Referable")

# Missing group ids are stored as -1 in integer arrays.
MISSING = -1


def check_sa_name(name: str) -> str:
    """Return *name* if it is a known SA, else raise ``ValueError``."""
    if name not in SA_NAMES:
        raise ValueError(
            f"Unknown sensitive attribute '{name}'. "
            f"Available attributes: {', '.join(SA_NAMES)}."
        )
    return name


@dataclass(frozen=True)
class Confusion:
    """A binary confusion matrix."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn
