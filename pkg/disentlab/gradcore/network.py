"""Encoder with dual latent heads, decoder, and the two latent classifiers.

The modules are used as stateless skeletons: the trainable tensors live in a
:class:`ModelParams` and are bound per call through
:func:`torch.func.functional_call`, so every forward pass is a pure function
of ``(params, inputs)``.

Topology (``s`` = image side, ``d`` = latent dimension)::

    encoder   conv1 C->16, conv2 16->32, conv3 32->64   (k4 s2 p1, SiLU each)
              fc    64*(s/8)^2 -> 2d, split into z_med | z_sensit
    decoder   fc    2d -> 64*(s/8)^2 (SiLU)
              up1 64->32, up2 32->16 (SiLU), up3 16->C (sigmoid)
    c_med     d -> 2    (baseline: 2d -> 2 on the concatenated latent)
    c_sensit  d -> 2

The baseline model has only ``encoder`` and ``c_med``.
"""

from __future__ import annotations

from collections import OrderedDict
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, NamedTuple, NewType

import torch
from torch import Tensor, nn
from torch.func import functional_call

Mode = Literal["baseline", "disentangled"]

# Latent halves are distinct types so that a head cannot be handed the other
# half by mistake.
ZMed = NewType("ZMed", Tensor)
ZSensit = NewType("ZSensit", Tensor)

# Top-level parameter groups, in enumeration order.
PARAM_GROUPS: tuple[str, ...] = ("encoder", "decoder", "c_med", "c_sensit")

_WIDTHS = (16, 32, 64)


class LatentPair(NamedTuple):
    """Batch of latent pairs, each ``[B, d]``."""

    z_med: ZMed
    z_sensit: ZSensit

    def joint(self) -> Tensor:
        return torch.cat([self.z_med, self.z_sensit], dim=1)


@dataclass(frozen=True)
class Architecture:
    """Shape-determining hyperparameters of a network."""

    mode: Mode = "disentangled"
    channels: int = 3
    image_size: int = 32
    latent_dim: int = 32

    def __post_init__(self) -> None:
        if self.image_size < 8 or self.image_size % 8:
            raise ValueError(
                f"image_size must be a positive multiple of 8, got {self.image_size}."
            )

    @property
    def bottleneck(self) -> int:
        return _WIDTHS[-1] * (self.image_size // 8) ** 2

    def to_dict(self) -> dict[str, object]:
        return {
            "mode": self.mode,
            "channels": self.channels,
            "image_size": self.image_size,
            "latent_dim": self.latent_dim,
        }


# ---------------------------------------------------------------------------
# Skeleton modules
# ---------------------------------------------------------------------------


class Encoder(nn.Module):
    """Three stride-2 convolutions and a linear layer to the joint latent.

    The output is ``[B, 2d]``; callers split it into ``z_med | z_sensit``.
    """

    def __init__(self, arch: Architecture) -> None:
        super().__init__()
        c1, c2, c3 = _WIDTHS
        self.conv1 = nn.Conv2d(arch.channels, c1, 4, stride=2, padding=1)
        self.conv2 = nn.Conv2d(c1, c2, 4, stride=2, padding=1)
        self.conv3 = nn.Conv2d(c2, c3, 4, stride=2, padding=1)
        self.fc = nn.Linear(arch.bottleneck, 2 * arch.latent_dim)
        self.act = nn.SiLU()

    def forward(self, x: Tensor) -> Tensor:
        h = self.act(self.conv1(x))
        h = self.act(self.conv2(h))
        h = self.act(self.conv3(h))
        return self.fc(h.flatten(start_dim=1))


class Decoder(nn.Module):
    """Mirror of the encoder: joint latent ``[B, 2d]`` to an image in ``[0, 1]``."""

    def __init__(self, arch: Architecture) -> None:
        super().__init__()
        c1, c2, c3 = _WIDTHS
        self.side = arch.image_size // 8
        self.fc = nn.Linear(2 * arch.latent_dim, arch.bottleneck)
        self.up1 = nn.ConvTranspose2d(c3, c2, 4, stride=2, padding=1)
        self.up2 = nn.ConvTranspose2d(c2, c1, 4, stride=2, padding=1)
        self.up3 = nn.ConvTranspose2d(c1, arch.channels, 4, stride=2, padding=1)
        self.act = nn.SiLU()

    def forward(self, z: Tensor) -> Tensor:
        h = self.act(self.fc(z)).view(-1, _WIDTHS[-1], self.side, self.side)
        h = self.act(self.up1(h))
        h = self.act(self.up2(h))
        return torch.sigmoid(self.up3(h))


class DisentanglementNet(nn.Module):
    """Container whose ``named_parameters`` order defines the enumeration order."""

    def __init__(self, arch: Architecture) -> None:
        super().__init__()
        d = arch.latent_dim
        self.encoder = Encoder(arch)
        if arch.mode == "disentangled":
            self.decoder = Decoder(arch)
            self.c_med = nn.Linear(d, 2)
            self.c_sensit = nn.Linear(d, 2)
        else:
            self.c_med = nn.Linear(2 * d, 2)


@lru_cache(maxsize=8)
def skeleton(arch: Architecture) -> DisentanglementNet:
    """Shared parameter-free template used for functional calls."""
    return DisentanglementNet(arch).requires_grad_(False)


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


def _fan_in(module: nn.Module) -> int:
    if isinstance(module, nn.ConvTranspose2d):
        # Each output pixel sees in_channels * k^2 / stride^2 inputs.
        k, s = module.kernel_size[0], module.stride[0]
        return max(1, module.in_channels * k * k // (s * s))
    if isinstance(module, nn.Conv2d):
        k = module.kernel_size[0]
        return module.in_channels * k * k
    if isinstance(module, nn.Linear):
        return module.in_features
    raise TypeError(f"No fan-in rule for {type(module).__name__}.")


@dataclass
class ModelParams:
    """All trainable tensors of one network, keyed by dotted name.

    The key order is the order of ``DisentanglementNet.named_parameters()``:
    ``encoder.conv1..conv3, encoder.fc``, then ``decoder.fc, decoder.up1..up3``,
    then ``c_med`` and ``c_sensit``, each as ``weight`` before ``bias``.
    Optimizer moments and checkpoints rely on this order.
    """

    arch: Architecture
    tensors: OrderedDict[str, Tensor]

    @classmethod
    def initialize(
        cls, arch: Architecture, seed: int = 0, dtype: torch.dtype = torch.float32
    ) -> ModelParams:
        """Uniform fan-in initialization, ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``.

        Biases start at zero. Draws come from one seeded generator in
        enumeration order, so equal seeds give equal tensors.
        """
        generator = torch.Generator().manual_seed(seed % 2**63)
        tensors: OrderedDict[str, Tensor] = OrderedDict()
        net = skeleton(arch)
        for module_name, module in net.named_modules():
            if not isinstance(module, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
                continue
            bound = 1.0 / _fan_in(module) ** 0.5
            weight = torch.rand(module.weight.shape, generator=generator, dtype=dtype)
            tensors[f"{module_name}.weight"] = (2 * weight - 1) * bound
            tensors[f"{module_name}.bias"] = torch.zeros(module.bias.shape, dtype=dtype)
        expected = [name for name, _ in net.named_parameters()]
        assert list(tensors) == expected, "parameter enumeration drifted"
        return cls(arch, tensors)

    @classmethod
    def names_for(cls, arch: Architecture) -> list[str]:
        return [name for name, _ in skeleton(arch).named_parameters()]

    def names(self) -> list[str]:
        return list(self.tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self.tensors.items())

    def __len__(self) -> int:
        return len(self.tensors)

    def numel(self) -> int:
        return sum(t.numel() for t in self.tensors.values())

    @property
    def dtype(self) -> torch.dtype:
        return next(iter(self.tensors.values())).dtype

    def map(self, fn: Callable[[Tensor], Tensor]) -> ModelParams:
        """New params with *fn* applied to every tensor."""
        return ModelParams(
            self.arch, OrderedDict((k, fn(v)) for k, v in self.tensors.items())
        )

    def clone(self) -> ModelParams:
        return self.map(lambda t: t.detach().clone())

    def to(self, dtype: torch.dtype) -> ModelParams:
        return self.map(lambda t: t.detach().to(dtype))

    def requires_grad_(self, flag: bool = True) -> ModelParams:
        for tensor in self.tensors.values():
            tensor.requires_grad_(flag)
        return self

    def group(self, prefix: str) -> OrderedDict[str, Tensor]:
        """Tensors of one group with the group prefix stripped."""
        cut = len(prefix) + 1
        return OrderedDict(
            (k[cut:], v) for k, v in self.tensors.items() if k.startswith(prefix + ".")
        )

    def equal(self, other: ModelParams) -> bool:
        """Bit-exact equality of architecture, names and values."""
        return (
            self.arch == other.arch
            and self.names() == other.names()
            and all(torch.equal(a, other.tensors[k]) for k, a in self.tensors.items())
        )


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def _call(params: ModelParams, group: str, x: Tensor) -> Tensor:
    net = skeleton(params.arch)
    module = getattr(net, group, None)
    if module is None:
        available = ", ".join(g for g in PARAM_GROUPS if hasattr(net, g))
        raise ValueError(
            f"A {params.arch.mode} network has no '{group}'. Available: {available}."
        )
    return functional_call(module, params.group(group), (x,))


def _check_images(params: ModelParams, images: Tensor) -> None:
    arch = params.arch
    expected = (arch.channels, arch.image_size, arch.image_size)
    if images.ndim != 4 or tuple(images.shape[1:]) != expected:
        raise ValueError(
            f"Expected an image batch shaped [B, {expected[0]}, {expected[1]}, "
            f"{expected[2]}], got {tuple(images.shape)}."
        )


def _check_latent(params: ModelParams, z: Tensor, width: int, what: str) -> None:
    if z.ndim != 2 or z.shape[1] != width:
        raise ValueError(f"{what} must be shaped [B, {width}], got {tuple(z.shape)}.")


def encode(params: ModelParams, images: Tensor) -> LatentPair:
    """Map an image batch ``[B, C, H, W]`` to ``(z_med, z_sensit)``."""
    _check_images(params, images)
    out = _call(params, "encoder", images)
    d = params.arch.latent_dim
    return LatentPair(ZMed(out[:, :d]), ZSensit(out[:, d:]))


def decode(params: ModelParams, latents: LatentPair) -> Tensor:
    """Reconstruct images in [0, 1] from a latent pair."""
    d = params.arch.latent_dim
    _check_latent(params, latents.z_med, d, "z_med")
    _check_latent(params, latents.z_sensit, d, "z_sensit")
    return _call(params, "decoder", latents.joint())


def classify_med(params: ModelParams, z_med: ZMed) -> Tensor:
    """P(Normal), P(Referable) from the medical latent only."""
    _check_latent(params, z_med, params.arch.latent_dim, "z_med")
    return torch.softmax(_call(params, "c_med", z_med), dim=1)


def classify_sensit(params: ModelParams, z_sensit: ZSensit) -> Tensor:
    """Probabilities over the target SA's two groups from the sensitive latent."""
    _check_latent(params, z_sensit, params.arch.latent_dim, "z_sensit")
    return torch.softmax(_call(params, "c_sensit", z_sensit), dim=1)


def classify_baseline(params: ModelParams, latents: LatentPair) -> Tensor:
    """DR probabilities of the baseline head on the concatenated latent."""
    joint = latents.joint()
    _check_latent(params, joint, 2 * params.arch.latent_dim, "joint latent")
    return torch.softmax(_call(params, "c_med", joint), dim=1)


def dr_probabilities(params: ModelParams, images: Tensor) -> Tensor:
    """DR class probabilities for either mode; the disentangled model reads z_med."""
    latents = encode(params, images)
    if params.arch.mode == "baseline":
        return classify_baseline(params, latents)
    return classify_med(params, latents.z_med)
