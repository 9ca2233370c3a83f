"""Gradients by autograd and their verification by central differences."""

from __future__ import annotations

import logging
from collections import OrderedDict
from collections.abc import Callable

import numpy as np
import torch
from torch import Tensor

from disentlab.gradcore.network import ModelParams

logger = logging.getLogger(__name__)

LossFn = Callable[[ModelParams], Tensor]
GradFn = Callable[[ModelParams], "OrderedDict[str, Tensor]"]


def compute_grads(
    loss_fn: LossFn, params: ModelParams
) -> tuple[Tensor, OrderedDict[str, Tensor]]:
    """Evaluate *loss_fn* and return ``(loss, grads)`` keyed like *params*.

    Tensors the loss does not depend on get zero gradients.
    """
    live = params.map(lambda t: t.detach().requires_grad_(True))
    loss = loss_fn(live)
    if loss.ndim != 0:
        raise ValueError(f"Loss must be a scalar, got shape {tuple(loss.shape)}.")
    tensors = [t for _, t in live]
    raw = torch.autograd.grad(loss, tensors, allow_unused=True)
    grads = OrderedDict(
        (name, torch.zeros_like(t) if g is None else g.detach())
        for (name, t), g in zip(live, raw)
    )
    return loss.detach(), grads


def grad_check(
    loss_fn: LossFn,
    params: ModelParams,
    probe_count: int = 200,
    seed: int = 0,
    step: float = 1e-6,
    floor: float = 1e-5,
    grad_fn: GradFn | None = None,
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    *probe_count* coordinates are drawn uniformly without replacement over
    all parameters. For each one the error is
    ``|a - n| / max(|a|, |n|, floor)``; the absolute floor keeps coordinates
    with a vanishing gradient from dominating. Run in float64.

    *grad_fn* overrides autograd for the analytic side, which is how the
    harness itself is tested against a deliberately wrong gradient.
    """
    base = params.clone()
    if grad_fn is None:
        _, analytic = compute_grads(loss_fn, base)
    else:
        analytic = grad_fn(base)

    sizes = np.array([t.numel() for _, t in base])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    rng = np.random.default_rng(seed)
    picks = rng.choice(total, size=min(probe_count, total), replace=False)

    names = base.names()
    worst = 0.0
    with torch.no_grad():
        for flat in np.sort(picks):
            k = int(np.searchsorted(offsets, flat, side="right") - 1)
            name = names[k]
            view = base.tensors[name].view(-1)
            idx = int(flat - offsets[k])
            original = view[idx].item()
            view[idx] = original + step
            plus = float(loss_fn(base))
            view[idx] = original - step
            minus = float(loss_fn(base))
            view[idx] = original
            numeric = (plus - minus) / (2.0 * step)
            exact = float(analytic[name].reshape(-1)[idx])
            err = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
            if err > worst:
                logger.debug(
                    "%s[%d]: analytic=%g numeric=%g", name, idx, exact, numeric
                )
            worst = max(worst, err)
    return worst
