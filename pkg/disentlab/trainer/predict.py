"""Inference: DR scores, prediction records and latent extraction."""

from __future__ import annotations

from typing import Literal

import numpy as np
import torch

from disentlab._types import SA_NAMES
from disentlab.fairaudit.records import PredictionRecord
from disentlab.gradcore.network import LatentPair, ModelParams, dr_probabilities, encode
from disentlab.synthgen.dataset import Dataset

LatentKind = Literal["med", "sensit", "joint"]


def batch_slices(n: int, size: int) -> list[slice]:
    return [slice(start, min(start + size, n)) for start in range(0, n, size)]


def predict_scores(
    params: ModelParams, dataset: Dataset, batch_size: int = 256
) -> np.ndarray:
    """``P(Referable)`` per sample, evaluated in fixed-size batches."""
    out = np.empty(len(dataset), dtype=np.float64)
    with torch.no_grad():
        for part in batch_slices(len(dataset), batch_size):
            images = torch.from_numpy(dataset.images[part]).to(params.dtype)
            out[part] = dr_probabilities(params, images)[:, 1].double().numpy()
    return np.clip(out, 0.0, 1.0)


def predict(
    params: ModelParams,
    split: Dataset,
    threshold: float = 0.5,
    batch_size: int = 256,
) -> list[PredictionRecord]:
    """One record per sample. ``y_hat`` is 1 iff ``score > threshold`` (a tie gives 0).

    The baseline reads the concatenated latent; the disentangled model
    reads ``z_med`` only.
    """
    scores = predict_scores(params, split, batch_size)
    meta = split.meta
    sa_columns = {name: meta[name].to_numpy(dtype=np.int64) for name in SA_NAMES}
    return [
        PredictionRecord(
            image_id=str(meta["image_id"].iat[i]),
            patient_id=str(meta["patient_id"].iat[i]),
            y_true=int(meta["dr"].iat[i]),
            score=float(scores[i]),
            y_hat=int(scores[i] > threshold),
            sa={name: int(sa_columns[name][i]) for name in SA_NAMES},
        )
        for i in range(len(split))
    ]


def extract_latents(
    params: ModelParams,
    dataset: Dataset,
    which: LatentKind = "med",
    batch_size: int = 256,
) -> np.ndarray:
    """Latent vectors ``[N, d]`` (``[N, 2d]`` for ``joint``) as float64."""
    if which not in ("med", "sensit", "joint"):
        raise ValueError(f"Unknown latent '{which}'. Available: med, sensit, joint.")
    chunks = []
    with torch.no_grad():
        for part in batch_slices(len(dataset), batch_size):
            latents: LatentPair = encode(
                params, torch.from_numpy(dataset.images[part]).to(params.dtype)
            )
            if which == "med":
                chunk = latents.z_med
            elif which == "sensit":
                chunk = latents.z_sensit
            else:
                chunk = latents.joint()
            chunks.append(chunk.double().numpy())
    width = params.arch.latent_dim * (2 if which == "joint" else 1)
    return np.concatenate(chunks) if chunks else np.empty((0, width))
