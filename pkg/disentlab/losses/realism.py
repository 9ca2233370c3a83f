"""SSIM, capped PSNR, and the reconstruction (realism) loss built on them."""

from __future__ import annotations

from typing import Literal

import torch
import torch.nn.functional as F
from torch import Tensor

from disentlab.config.models import LossWeights

SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2

Reduction = Literal["mean", "none"]


def _as_batch(a: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    if a.shape != b.shape:
        raise ValueError(f"Image shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}.")
    if a.ndim == 3:
        return a[None], b[None]
    if a.ndim != 4:
        raise ValueError(f"Expected [C, H, W] or [B, C, H, W], got {tuple(a.shape)}.")
    return a, b


def ssim(
    a: Tensor,
    b: Tensor,
    window: int = 7,
    c1: float = SSIM_C1,
    c2: float = SSIM_C2,
    reduction: Reduction = "mean",
) -> Tensor:
    """Mean local SSIM over all valid ``window x window`` patches and channels.

    Local statistics use a uniform window. Products are arranged so that the
    result is exactly symmetric in ``(a, b)`` and exactly 1 for ``a == b``.
    ``reduction="none"`` returns one value per batch element.
    """
    a, b = _as_batch(a, b)
    if window > a.shape[-1] or window > a.shape[-2]:
        raise ValueError(
            f"SSIM window {window} is larger than the "
            f"{a.shape[-2]}x{a.shape[-1]} image."
        )
    pool = lambda x: F.avg_pool2d(x, window, stride=1)  # noqa: E731
    mu_a, mu_b = pool(a), pool(b)
    mu_aa, mu_bb, mu_ab = mu_a * mu_a, mu_b * mu_b, mu_a * mu_b
    var_a = pool(a * a) - mu_aa
    var_b = pool(b * b) - mu_bb
    cov = pool(a * b) - mu_ab
    numerator = (2 * mu_ab + c1) * (2 * cov + c2)
    denominator = (mu_aa + mu_bb + c1) * (var_a + var_b + c2)
    per_sample = (numerator / denominator).flatten(start_dim=1).mean(dim=1)
    return per_sample.mean() if reduction == "mean" else per_sample


def psnr(
    a: Tensor,
    b: Tensor,
    max_value: float = 1.0,
    cap: float = 48.0,
    reduction: Reduction = "mean",
) -> Tensor:
    """Peak signal-to-noise ratio in dB, capped at *cap*.

    Images whose MSE is at or below ``max_value^2 * 10^(-cap/10)``, identical
    images included, score exactly *cap*.
    """
    a, b = _as_batch(a, b)
    mse = ((a - b) ** 2).flatten(start_dim=1).mean(dim=1)
    peak = max_value**2
    floor = peak * 10.0 ** (-cap / 10.0)
    value = 10.0 * torch.log10(peak / mse.clamp(min=floor))
    capped = torch.where(
        mse <= floor, torch.full_like(value, cap), value.clamp(max=cap)
    )
    return capped.mean() if reduction == "mean" else capped


def realism_loss(
    original: Tensor, reconstruction: Tensor, weights: LossWeights | None = None
) -> Tensor:
    """Batch mean of ``(1 - SSIM) + (1 - PSNR / alpha_psnr)``."""
    weights = weights or LossWeights()
    s = ssim(original, reconstruction, window=weights.ssim_window, reduction="none")
    p = psnr(original, reconstruction, cap=weights.alpha_psnr, reduction="none")
    return ((1.0 - s) + (1.0 - p / weights.alpha_psnr)).mean()
