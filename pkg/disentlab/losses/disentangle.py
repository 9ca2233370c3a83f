"""Latent-independence loss: perturb one latent, decode, re-encode, compare."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from typing import Literal

import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator
from torch import Tensor

from disentlab.errors import NonFiniteLossError
from disentlab.gradcore.network import (
    LatentPair,
    ModelParams,
    ZMed,
    ZSensit,
    decode,
    encode,
)

LatentName = Literal["med", "sensit"]
_ORDER: tuple[LatentName, ...] = ("med", "sensit")

EncodeFn = Callable[[ModelParams, Tensor], LatentPair]
DecodeFn = Callable[[ModelParams, LatentPair], Tensor]


class PerturbationSpec(BaseModel):
    """Gaussian noise of scale ``noise_sigma`` added to one latent."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    noise_sigma: float = Field(gt=0.0)
    target: LatentName

    @field_validator("noise_sigma")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"noise_sigma must be finite, got {value}.")
        return value


def default_specs(sigma: float) -> list[PerturbationSpec]:
    return [PerturbationSpec(noise_sigma=sigma, target=t) for t in _ORDER]


def _half(latents: LatentPair, name: LatentName) -> Tensor:
    return latents.z_med if name == "med" else latents.z_sensit


def _require_finite(tensor: Tensor, stage: str, target: str) -> None:
    if not bool(torch.isfinite(tensor).all()):
        raise NonFiniteLossError(stage, f"perturbing z_{target}")


def disentanglement_loss(
    params: ModelParams,
    images: Tensor,
    specs: Sequence[PerturbationSpec],
    rng_seed: int,
    include_self_term: bool = True,
    encode_fn: EncodeFn = encode,
    decode_fn: DecodeFn = decode,
) -> Tensor:
    """Penalty on how much re-encoded latents move after perturbing one latent.

    For each spec ``i``: encode the batch, add ``N(0, sigma_i^2)`` noise to
    latent ``i`` only, decode, and re-encode. The per-sample term is the
    squared distance between original and re-encoded latents, summed over
    coordinates, over latent ``i`` itself (unless ``include_self_term`` is
    False) and over the other latent. Terms are batch-averaged and summed over
    specs.

    Noise is drawn from one generator seeded with *rng_seed*, in spec order,
    one draw per sample and coordinate.

    Raises
    ------
    ValueError
        If *specs* does not name each latent exactly once.
    NonFiniteLossError
        If the noisy latent, the decoded image or the re-encoded latent is not
        finite; the stage is named.
    """
    targets = sorted(spec.target for spec in specs)
    if targets != sorted(_ORDER):
        raise ValueError(
            f"Need exactly one perturbation per latent (med, sensit), got {targets}."
        )
    original = encode_fn(params, images)
    generator = torch.Generator().manual_seed(int(rng_seed) % 2**63)
    total = images.new_zeros(())
    for spec in specs:
        clean = _half(original, spec.target)
        noise = torch.randn(clean.shape, generator=generator, dtype=clean.dtype)
        noisy = clean + spec.noise_sigma * noise
        _require_finite(noisy, "noise", spec.target)
        if spec.target == "med":
            perturbed = LatentPair(ZMed(noisy), original.z_sensit)
        else:
            perturbed = LatentPair(original.z_med, ZSensit(noisy))
        altered = decode_fn(params, perturbed)
        _require_finite(altered, "decode", spec.target)
        again = encode_fn(params, altered)
        _require_finite(again.joint(), "re-encode", spec.target)
        for name in _ORDER:
            if name == spec.target and not include_self_term:
                continue
            diff = _half(original, name) - _half(again, name)
            total = total + (diff * diff).sum(dim=1).mean()
    return total


def calibrate_noise_sigma(latents: LatentPair, scale: float = 0.5) -> float:
    """``scale * mean latent L2 norm / sqrt(d)`` over both halves, floored at 1e-6."""
    with torch.no_grad():
        rows = torch.cat([latents.z_med, latents.z_sensit], dim=0)
        d = rows.shape[1]
        mean_norm = float(rows.norm(dim=1).mean()) if rows.shape[0] else 0.0
    return max(scale * mean_norm / math.sqrt(d), 1e-6)
