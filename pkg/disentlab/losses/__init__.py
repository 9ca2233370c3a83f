"""Training objectives: classification, realism, disentanglement, leakage, total."""

from disentlab.losses.classification import (
    classification_loss,
    cross_entropy,
    focal_loss,
)
from disentlab.losses.disentangle import (
    PerturbationSpec,
    calibrate_noise_sigma,
    default_specs,
    disentanglement_loss,
)
from disentlab.losses.leakage import sa_leakage_loss
from disentlab.losses.realism import psnr, realism_loss, ssim
from disentlab.losses.total import (
    LossComponents,
    baseline_objective,
    disentangled_objective,
    total_loss,
)

__all__ = [
    "LossComponents",
    "PerturbationSpec",
    "baseline_objective",
    "calibrate_noise_sigma",
    "classification_loss",
    "cross_entropy",
    "default_specs",
    "disentangled_objective",
    "disentanglement_loss",
    "focal_loss",
    "psnr",
    "realism_loss",
    "sa_leakage_loss",
    "ssim",
    "total_loss",
]
