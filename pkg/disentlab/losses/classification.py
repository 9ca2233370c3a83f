"""Focal loss and the two-headed classification loss."""

from __future__ import annotations

from collections.abc import Sequence

import torch
from torch import Tensor

from disentlab.config.models import LossWeights

LOG_FLOOR = 1e-12


def _target_probs(probs: Tensor, targets: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """``(p_t, class index, present mask)`` for index or one-hot *targets*.

    Index targets of ``-1`` mark unknown labels; their rows are masked out.
    """
    if probs.ndim != 2:
        raise ValueError(
            f"Probabilities must be shaped [B, K], got {tuple(probs.shape)}."
        )
    if targets.ndim == 2:
        if targets.shape != probs.shape:
            raise ValueError(
                f"One-hot targets {tuple(targets.shape)} do not match "
                f"probabilities {tuple(probs.shape)}."
            )
        index = targets.argmax(dim=1)
    else:
        index = targets.long()
    if index.shape[0] != probs.shape[0]:
        raise ValueError(
            f"Batch sizes differ: {probs.shape[0]} probability rows, "
            f"{index.shape[0]} targets."
        )
    present = index >= 0
    if bool((index >= probs.shape[1]).any()):
        raise ValueError(
            f"Target class out of range for {probs.shape[1]} classes."
        )
    safe = index.clamp(min=0)
    p_t = probs.gather(1, safe[:, None]).squeeze(1)
    return p_t, safe, present


def _weights_for(
    index: Tensor, class_weights: Sequence[float] | Tensor | None, like: Tensor
) -> Tensor:
    if class_weights is None:
        return torch.ones_like(like)
    w = torch.as_tensor(class_weights, dtype=like.dtype)
    return w[index]


def focal_loss(
    probs: Tensor,
    targets: Tensor,
    class_weights: Sequence[float] | Tensor | None = None,
    gamma: float = 2.0,
) -> Tensor:
    """Batch mean of ``-w_t * (1 - p_t)^gamma * log(p_t)``.

    ``log`` is floored at ``1e-12``. With ``gamma=0`` this is weighted
    cross-entropy.
    """
    p_t, index, present = _target_probs(probs, targets)
    w = _weights_for(index, class_weights, p_t)
    per_sample = -w * (1.0 - p_t) ** gamma * torch.log(p_t.clamp(min=LOG_FLOOR))
    return torch.where(present, per_sample, torch.zeros_like(per_sample)).mean()


def cross_entropy(
    probs: Tensor,
    targets: Tensor,
    class_weights: Sequence[float] | Tensor | None = None,
) -> Tensor:
    """Weighted cross-entropy on probabilities; unknown (-1) targets add zero."""
    return focal_loss(probs, targets, class_weights, gamma=0.0)


def classification_loss(
    p_med: Tensor,
    y_med: Tensor,
    p_sensit: Tensor | None,
    y_sensit: Tensor | None,
    weights: LossWeights,
    class_weights: Sequence[float] | Tensor | None = None,
) -> Tensor:
    """``lambda_med * CE(p_med, y_med) + lambda_sensit * CE(p_sensit, y_sensit)``.

    *class_weights* apply to the DR term only. The SA term is skipped when
    ``p_sensit`` is None; samples with an unknown SA contribute zero to it.
    """
    loss = weights.lambda_med * cross_entropy(p_med, y_med, class_weights)
    if p_sensit is not None:
        if y_sensit is None:
            raise ValueError("p_sensit was given without y_sensit.")
        if p_sensit.shape[0] != p_med.shape[0]:
            raise ValueError(
                f"Head batch sizes differ: {p_med.shape[0]} vs {p_sensit.shape[0]}."
            )
        loss = loss + weights.lambda_sensit * cross_entropy(p_sensit, y_sensit)
    return loss
