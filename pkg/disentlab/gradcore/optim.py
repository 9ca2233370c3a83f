"""Adam with decoupled weight decay, as a pure function over ModelParams."""

from __future__ import annotations

from collections import OrderedDict
from collections.abc import Mapping
from dataclasses import dataclass, field

import torch
from torch import Tensor

from disentlab.errors import NonFiniteGradientError
from disentlab.gradcore.network import ModelParams


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-6

    def to_dict(self) -> dict[str, float]:
        return {
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "weight_decay": self.weight_decay,
        }


@dataclass
class AdamState:
    """Step count and moment tensors aligned with the ModelParams order."""

    step: int
    m: OrderedDict[str, Tensor]
    v: OrderedDict[str, Tensor]
    hyper: AdamHyper = field(default_factory=AdamHyper)

    @classmethod
    def zeros_like(cls, params: ModelParams, hyper: AdamHyper) -> AdamState:
        m = OrderedDict((k, torch.zeros_like(t)) for k, t in params)
        v = OrderedDict((k, torch.zeros_like(t)) for k, t in params)
        return cls(step=0, m=m, v=v, hyper=hyper)

    def equal(self, other: AdamState) -> bool:
        return (
            self.step == other.step
            and self.hyper == other.hyper
            and list(self.m) == list(other.m)
            and all(torch.equal(t, other.m[k]) for k, t in self.m.items())
            and all(torch.equal(t, other.v[k]) for k, t in self.v.items())
        )


def adam_step(
    state: AdamState, params: ModelParams, grads: Mapping[str, Tensor]
) -> tuple[AdamState, ModelParams]:
    """One AdamW update; returns new state and params, inputs are untouched.

    ``p <- p - lr*wd*p - lr * m_hat / (sqrt(v_hat) + eps)`` with bias-corrected
    moments ``m_hat = m / (1 - beta1^t)`` and ``v_hat = v / (1 - beta2^t)``.

    Raises
    ------
    NonFiniteGradientError
        If any gradient tensor contains NaN or inf; names the tensor.
    KeyError
        If *grads* does not cover every parameter.
    """
    missing = [name for name in params.names() if name not in grads]
    if missing:
        raise KeyError(f"No gradient for parameter(s): {', '.join(missing)}.")
    for name in params.names():
        if not bool(torch.isfinite(grads[name]).all()):
            raise NonFiniteGradientError(name)

    h = state.hyper
    t = state.step + 1
    bias1 = 1.0 - h.beta1**t
    bias2 = 1.0 - h.beta2**t
    new_m: OrderedDict[str, Tensor] = OrderedDict()
    new_v: OrderedDict[str, Tensor] = OrderedDict()
    new_p: OrderedDict[str, Tensor] = OrderedDict()
    with torch.no_grad():
        for name, p in params:
            g = grads[name].to(p.dtype)
            m = h.beta1 * state.m[name] + (1.0 - h.beta1) * g
            v = h.beta2 * state.v[name] + (1.0 - h.beta2) * g * g
            update = (m / bias1) / (torch.sqrt(v / bias2) + h.eps)
            decayed = p.detach() - h.lr * h.weight_decay * p.detach()
            new_p[name] = decayed - h.lr * update
            new_m[name] = m
            new_v[name] = v
    return AdamState(t, new_m, new_v, h), ModelParams(params.arch, new_p)
