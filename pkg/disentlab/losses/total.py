"""Weighted total objective and the per-mode training objectives."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from torch import Tensor

from disentlab.config.models import LossWeights
from disentlab.gradcore.network import (
    ModelParams,
    classify_baseline,
    classify_med,
    classify_sensit,
    decode,
    encode,
)
from disentlab.losses.classification import classification_loss, focal_loss
from disentlab.losses.disentangle import default_specs, disentanglement_loss
from disentlab.losses.leakage import sa_leakage_loss
from disentlab.losses.realism import realism_loss


@dataclass(frozen=True)
class LossComponents:
    classifier: Tensor | float
    realism: Tensor | float
    disent: Tensor | float
    leakage: Tensor | float = 0.0


def total_loss(
    components: LossComponents, weights: LossWeights | None = None
) -> Tensor | float:
    """``L_classifier + lambda_r * L_realism + lambda_d * L_disent``.

    ``lambda_leak * L_leakage`` is added on top; baseline components leave it 0.
    """
    weights = weights or LossWeights()
    return (
        components.classifier
        + weights.lambda_r * components.realism
        + weights.lambda_d * components.disent
        + weights.lambda_leak * components.leakage
    )


def baseline_objective(
    params: ModelParams,
    images: Tensor,
    y_med: Tensor,
    weights: LossWeights,
    class_weights: Sequence[float] | None,
) -> Tensor:
    """Focal loss of the baseline DR head on the concatenated latent."""
    probs = classify_baseline(params, encode(params, images))
    return focal_loss(probs, y_med, class_weights, weights.focal_gamma)


def disentangled_objective(
    params: ModelParams,
    images: Tensor,
    y_med: Tensor,
    y_sensit: Tensor,
    weights: LossWeights,
    class_weights: Sequence[float] | None,
    noise_sigma: float,
    rng_seed: int,
) -> tuple[Tensor, LossComponents]:
    """Total objective of the disentanglement network on one batch."""
    latents = encode(params, images)
    p_med = classify_med(params, latents.z_med)
    p_sensit = classify_sensit(params, latents.z_sensit)
    classifier = classification_loss(
        p_med,
        y_med,
        p_sensit,
        y_sensit,
        weights,
        class_weights if weights.weight_med_classes else None,
    )
    realism = (
        realism_loss(images, decode(params, latents), weights)
        if weights.lambda_r > 0
        else images.new_zeros(())
    )
    disent = (
        disentanglement_loss(
            params,
            images,
            default_specs(noise_sigma),
            rng_seed,
            include_self_term=weights.include_self_term,
        )
        if weights.lambda_d > 0
        else images.new_zeros(())
    )
    leakage = (
        sa_leakage_loss(latents.z_med, y_sensit, y_med)
        if weights.lambda_leak > 0
        else images.new_zeros(())
    )
    components = LossComponents(classifier, realism, disent, leakage)
    return total_loss(components, weights), components  # type: ignore[return-value]
