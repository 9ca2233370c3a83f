"""Pydantic v2 configuration models for every disentlab stage.

Every model is JSON-serializable and round-trips through
``.model_dump_json()`` / ``.model_validate_json()``. Unknown fields are
rejected so that a typo in a config file never silently falls back to a
default.
"""

from __future__ import annotations

import math
from typing import Annotated, Any, Literal

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from disentlab._types import SA_NAMES, SAName

# Positive rate of group 1 per SA. The primary SA default is chosen so that a
# strong confound (rho up to ~0.93) is feasible at the default DR prevalence.
DEFAULT_SA_MARGINALS: dict[str, float] = {
    "age": 0.2,
    "sex": 0.34,
    "education": 0.54,
    "insurance": 0.08,
    "obesity": 0.08,
}

# Defaults per training mode: (batch size, learning rate).
MODE_DEFAULTS: dict[str, tuple[int, float]] = {
    "baseline": (4, 1e-5),
    "disentangled": (32, 5e-5),
}


def _split_csv(value: Any) -> Any:
    """Accept ``"0.7, 0.1, 0.2"`` wherever a tuple is expected."""
    if isinstance(value, str):
        return tuple(part.strip() for part in value.split(",") if part.strip())
    return value


_CSV = BeforeValidator(_split_csv)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeneratorConfig(_Strict):
    """Synthetic fundus dataset with a controllable SA/DR confound."""

    n_patients: int = Field(500, ge=1)
    images_per_patient: int = Field(4, ge=1)
    image_size: int = Field(32, ge=8)
    channels: int = Field(3, ge=1)
    confound_rho: float = Field(0.0, ge=-1.0, le=1.0)
    dr_prevalence: float = Field(0.18, gt=0.0, lt=1.0)
    primary_sa: SAName = "age"
    sa_marginals: dict[str, float] = Field(
        default_factory=lambda: dict(DEFAULT_SA_MARGINALS)
    )
    lesion_intensity: float = Field(0.5, ge=0.0)
    sa_feature_strength: float = Field(0.2, ge=0.0)
    seed: int = Field(0, ge=0, lt=2**64)

    @field_validator("image_size")
    @classmethod
    def _divisible_by_eight(cls, value: int) -> int:
        if value % 8:
            raise ValueError(
                f"image_size must be a multiple of 8 (three stride-2 stages), "
                f"got {value}. Try 32."
            )
        return value

    @field_validator("sa_marginals")
    @classmethod
    def _complete_marginals(cls, value: dict[str, float]) -> dict[str, float]:
        unknown = sorted(set(value) - set(SA_NAMES))
        if unknown:
            raise ValueError(
                f"Unknown SA name(s) in sa_marginals: {', '.join(unknown)}. "
                f"Available attributes: {', '.join(SA_NAMES)}."
            )
        merged = {
            name: float(value.get(name, DEFAULT_SA_MARGINALS[name]))
            for name in SA_NAMES
        }
        for name, rate in merged.items():
            if not 0.0 < rate < 1.0:
                raise ValueError(
                    f"sa_marginals.{name} must lie strictly between 0 and 1, "
                    f"got {rate}."
                )
        return merged


class SplitConfig(_Strict):
    """Patient-level stratified train/val/test split."""

    fractions: Annotated[tuple[float, float, float], _CSV] = (0.7, 0.1, 0.2)
    seed: int = Field(0, ge=0, lt=2**64)

    @field_validator("fractions")
    @classmethod
    def _sum_to_one(
        cls, value: tuple[float, float, float]
    ) -> tuple[float, float, float]:
        if any(f < 0 for f in value) or not math.isclose(sum(value), 1.0, abs_tol=1e-9):
            raise ValueError(
                f"Split fractions must be non-negative and sum to 1, got {value}."
            )
        return value


class AugmentationConfig(_Strict):
    """Ranges from which per-image augmentation parameters are drawn.

    Magnitudes are desk-scale choices; rotation is limited to quarter turns
    and colour jitter to brightness/contrast.
    """

    enabled: bool = True
    flip_probability: float = Field(0.5, ge=0.0, le=1.0)
    rotate: bool = True
    brightness: float = Field(0.05, ge=0.0)
    contrast: float = Field(0.1, ge=0.0, lt=1.0)
    blur_probability: float = Field(0.2, ge=0.0, le=1.0)
    blur_max_sigma: float = Field(0.6, ge=0.0)


class LossWeights(_Strict):
    """Weights and constants of every training objective."""

    lambda_med: float = Field(1.0, ge=0.0)
    lambda_sensit: float = Field(1.0, ge=0.0)
    lambda_r: float = Field(1.0, ge=0.0)
    lambda_d: float = Field(5.0, ge=0.0)
    # DR-conditional z_med/SA decorrelation; disentangled mode only.
    lambda_leak: float = Field(5.0, ge=0.0)
    alpha_psnr: float = Field(48.0, gt=0.0)
    focal_gamma: float = Field(2.0, ge=0.0)
    class_weights: Annotated[tuple[float, float] | None, _CSV] = None
    weight_med_classes: bool = True
    include_self_term: bool = True
    noise_sigma: float | None = Field(None, gt=0.0)
    noise_scale: float = Field(0.5, gt=0.0)
    ssim_window: int = Field(7, ge=1)

    @field_validator("class_weights")
    @classmethod
    def _positive_weights(
        cls, value: tuple[float, float] | None
    ) -> tuple[float, float] | None:
        if value is not None and any(w <= 0 for w in value):
            raise ValueError(f"class_weights must be positive, got {value}.")
        return value


class TrainConfig(_Strict):
    """One training run, baseline or disentangled."""

    mode: Literal["baseline", "disentangled"] = "baseline"
    target_sa: SAName | None = None
    epochs_max: int = Field(30, ge=1)
    patience: int = Field(10, ge=0)
    batch_size: int | None = Field(None, ge=1)
    eval_batch_size: int = Field(256, ge=1)
    lr: float | None = Field(None, gt=0.0)
    weight_decay: float = Field(1e-6, ge=0.0)
    latent_dim: int = Field(32, ge=1)
    threshold: float = Field(0.5, gt=0.0, lt=1.0)
    seed: int = Field(0, ge=0, lt=2**64)
    loss: LossWeights = Field(default_factory=LossWeights)
    aug: AugmentationConfig = Field(default_factory=AugmentationConfig)

    @model_validator(mode="after")
    def _target_required(self) -> TrainConfig:
        if self.mode == "disentangled" and self.target_sa is None:
            raise ValueError(
                "Disentangled training needs a sensitive attribute to separate. "
                f"Set train.target_sa to one of: {', '.join(SA_NAMES)}."
            )
        return self

    @property
    def effective_batch_size(self) -> int:
        return self.batch_size or MODE_DEFAULTS[self.mode][0]

    @property
    def effective_lr(self) -> float:
        return self.lr or MODE_DEFAULTS[self.mode][1]


class AuditConfig(_Strict):
    """Fairness audit settings."""

    threshold: float = Field(0.5, gt=0.0, lt=1.0)
    risk_bins: int = Field(20, ge=2)
    bootstrap_resamples: int = Field(1000, ge=0)
    bootstrap_seed: int = Field(0, ge=0, lt=2**64)
    probe_seed: int = Field(0, ge=0, lt=2**64)
    sa_names: Annotated[tuple[SAName, ...], _CSV] = SA_NAMES  # type: ignore[assignment]


class ExperimentConfig(_Strict):
    """Everything one config file can set."""

    gen: GeneratorConfig = Field(default_factory=GeneratorConfig)
    split: SplitConfig = Field(default_factory=SplitConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    audit: AuditConfig = Field(default_factory=AuditConfig)
