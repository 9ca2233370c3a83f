"""Training-time augmentation: flips, quarter turns, brightness/contrast, blur.

Rotation is restricted to multiples of 90 degrees so that no interpolation
is needed at 32x32; colour jitter is brightness and contrast only.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.ndimage import gaussian_filter

from disentlab.config.models import AugmentationConfig


class AugmentParams(BaseModel):
    """One concrete augmentation. The all-default instance is the identity."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    hflip: bool = False
    vflip: bool = False
    quarter_turns: int = Field(0, ge=0, le=3)
    brightness_delta: float = 0.0
    contrast_scale: float = Field(1.0, gt=0.0)
    blur_sigma: float = Field(0.0, ge=0.0)


def augment(image: np.ndarray, params: AugmentParams) -> np.ndarray:
    """Apply *params* to one ``[C, H, W]`` image and clamp to [0, 1].

    Steps run in a fixed order: flips, rotation, contrast around the image
    mean, brightness shift, per-channel Gaussian blur. Steps at their
    neutral value are skipped, so the identity parameters return the input
    bit-exact.
    """
    out = image
    if params.hflip:
        out = out[:, :, ::-1]
    if params.vflip:
        out = out[:, ::-1, :]
    if params.quarter_turns:
        out = np.rot90(out, k=params.quarter_turns, axes=(1, 2))
    out = np.array(out, dtype=np.float32, copy=True)
    if params.contrast_scale != 1.0:
        mean = out.mean(dtype=np.float64)
        out = ((out - mean) * params.contrast_scale + mean).astype(np.float32)
    if params.brightness_delta != 0.0:
        out = (out + np.float32(params.brightness_delta)).astype(np.float32)
    if params.blur_sigma > 0.0:
        out = gaussian_filter(
            out, sigma=(0.0, params.blur_sigma, params.blur_sigma), mode="reflect"
        ).astype(np.float32)
    return np.clip(out, 0.0, 1.0)


def draw_params(config: AugmentationConfig, rng: np.random.Generator) -> AugmentParams:
    """Sample one :class:`AugmentParams` from the ranges in *config*.

    Every draw is made unconditionally so the stream position after a call
    does not depend on the outcome.
    """
    flips = rng.random(2) < config.flip_probability
    turns = int(rng.integers(0, 4))
    brightness = float(rng.uniform(-config.brightness, config.brightness))
    contrast = float(rng.uniform(1.0 - config.contrast, 1.0 + config.contrast))
    blur_on = bool(rng.random() < config.blur_probability)
    sigma = float(rng.uniform(0.0, config.blur_max_sigma))
    return AugmentParams(
        hflip=bool(flips[0]),
        vflip=bool(flips[1]),
        quarter_turns=turns if config.rotate else 0,
        brightness_delta=brightness,
        contrast_scale=contrast,
        blur_sigma=sigma if blur_on else 0.0,
    )


def random_augment(
    image: np.ndarray,
    config: AugmentationConfig,
    rng_seed: int | np.random.SeedSequence,
) -> np.ndarray:
    """Draw parameters from *config* with *rng_seed* and apply them."""
    if not config.enabled:
        return np.array(image, dtype=np.float32, copy=True)
    rng = np.random.default_rng(rng_seed)
    return augment(image, draw_params(config, rng))
