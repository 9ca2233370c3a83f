"""Differentiable network, optimizer, gradient verification and checkpoints."""

from disentlab.gradcore.checkpoint import (
    decode_checkpoint,
    encode_checkpoint,
    read_checkpoint,
    write_checkpoint,
)
from disentlab.gradcore.gradcheck import compute_grads, grad_check
from disentlab.gradcore.network import (
    Architecture,
    LatentPair,
    ModelParams,
    ZMed,
    ZSensit,
    classify_baseline,
    classify_med,
    classify_sensit,
    decode,
    dr_probabilities,
    encode,
)
from disentlab.gradcore.optim import AdamHyper, AdamState, adam_step

__all__ = [
    "AdamHyper",
    "AdamState",
    "Architecture",
    "LatentPair",
    "ModelParams",
    "ZMed",
    "ZSensit",
    "adam_step",
    "classify_baseline",
    "classify_med",
    "classify_sensit",
    "compute_grads",
    "decode",
    "decode_checkpoint",
    "dr_probabilities",
    "encode",
    "encode_checkpoint",
    "grad_check",
    "read_checkpoint",
    "write_checkpoint",
]
