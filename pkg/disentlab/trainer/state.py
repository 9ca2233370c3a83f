"""Resumable training state and model files, stored as checkpoints."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

from torch import Tensor

from disentlab.config.models import TrainConfig
from disentlab.errors import CheckpointFormatError, ConfigError
from disentlab.gradcore.checkpoint import read_checkpoint, write_checkpoint
from disentlab.gradcore.network import Architecture, ModelParams
from disentlab.gradcore.optim import AdamHyper, AdamState
from disentlab.trainer.history import EpochRecord

STATE_KIND = "training_state"
MODEL_KIND = "model"


@dataclass
class TrainingState:
    """Everything needed to continue a run after ``next_epoch - 1``."""

    config: TrainConfig
    params: ModelParams
    adam: AdamState
    best_params: ModelParams
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_f1: float = float("-inf")
    stale: int = 0
    next_epoch: int = 0
    stopped: bool = False


def _prefixed(prefix: str, tensors: OrderedDict[str, Tensor]) -> dict[str, Tensor]:
    return {f"{prefix}/{name}": t for name, t in tensors.items()}


def _group(
    prefix: str, tensors: OrderedDict[str, Tensor], names: list[str]
) -> OrderedDict[str, Tensor]:
    out: OrderedDict[str, Tensor] = OrderedDict()
    for name in names:
        key = f"{prefix}/{name}"
        if key not in tensors:
            raise CheckpointFormatError(f"Checkpoint lacks tensor '{key}'.")
        out[name] = tensors[key]
    return out


def _arch_from(header: dict) -> Architecture:
    try:
        return Architecture(**header["arch"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointFormatError(
            f"Checkpoint header has no valid 'arch': {exc}"
        ) from exc


def save_state(state: TrainingState, path: str | Path) -> None:
    header = {
        "kind": STATE_KIND,
        "arch": state.params.arch.to_dict(),
        "train": state.config.model_dump(mode="json"),
        "adam": {"step": state.adam.step, "hyper": state.adam.hyper.to_dict()},
        "records": [r.to_dict() for r in state.records],
        "best_epoch": state.best_epoch,
        "best_f1": state.best_f1,
        "stale": state.stale,
        "next_epoch": state.next_epoch,
        "stopped": state.stopped,
    }
    tensors: dict[str, Tensor] = {}
    tensors.update(_prefixed("params", state.params.tensors))
    tensors.update(_prefixed("adam.m", state.adam.m))
    tensors.update(_prefixed("adam.v", state.adam.v))
    tensors.update(_prefixed("best", state.best_params.tensors))
    write_checkpoint(path, header, tensors)


def load_state(path: str | Path) -> TrainingState:
    """Read a state written by :func:`save_state`.

    Raises
    ------
    CheckpointFormatError
        If the file is not a training-state checkpoint or lacks tensors.
    """
    header, tensors = read_checkpoint(path)
    if header.get("kind") != STATE_KIND:
        raise CheckpointFormatError(
            f"{path} holds a '{header.get('kind')}' checkpoint, not a training state."
        )
    arch = _arch_from(header)
    names = ModelParams.names_for(arch)
    try:
        config = TrainConfig.model_validate(header["train"])
        hyper = AdamHyper(**header["adam"]["hyper"])
        records = [EpochRecord.from_dict(r) for r in header["records"]]
        return TrainingState(
            config=config,
            params=ModelParams(arch, _group("params", tensors, names)),
            adam=AdamState(
                step=int(header["adam"]["step"]),
                m=_group("adam.m", tensors, names),
                v=_group("adam.v", tensors, names),
                hyper=hyper,
            ),
            best_params=ModelParams(arch, _group("best", tensors, names)),
            records=records,
            best_epoch=int(header["best_epoch"]),
            best_f1=float(header["best_f1"]),
            stale=int(header["stale"]),
            next_epoch=int(header["next_epoch"]),
            stopped=bool(header["stopped"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CheckpointFormatError):
            raise
        raise CheckpointFormatError(
            f"{path}: invalid training-state header: {exc}"
        ) from exc


def check_resumable(saved: TrainConfig, current: TrainConfig) -> None:
    """A run may only be resumed with the same config, ``epochs_max`` aside."""
    left = saved.model_dump(exclude={"epochs_max"})
    right = current.model_dump(exclude={"epochs_max"})
    if left != right:
        changed = sorted(k for k in left if left[k] != right.get(k))
        raise ConfigError(
            f"Cannot resume: the checkpoint was trained with different settings "
            f"({', '.join(changed)}). Only train.epochs_max may change on resume."
        )


def save_model(
    params: ModelParams, path: str | Path, config: TrainConfig | None = None
) -> None:
    header = {
        "kind": MODEL_KIND,
        "arch": params.arch.to_dict(),
        "train": None if config is None else config.model_dump(mode="json"),
    }
    write_checkpoint(path, header, _prefixed("params", params.tensors))


def load_model(path: str | Path) -> ModelParams:
    header, tensors = read_checkpoint(path)
    if header.get("kind") not in (MODEL_KIND, STATE_KIND):
        raise CheckpointFormatError(f"{path} is not a model checkpoint.")
    arch = _arch_from(header)
    prefix = "params" if header["kind"] == MODEL_KIND else "best"
    return ModelParams(arch, _group(prefix, tensors, ModelParams.names_for(arch)))
