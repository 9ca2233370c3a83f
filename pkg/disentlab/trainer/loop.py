"""Training loops for the baseline classifier and the disentanglement network.

Both loops share one schedule:

* every epoch derives its own seeds from ``(seed, epoch)`` for the batch
  order, the per-image augmentation and the latent noise;
* after each epoch the DR head is scored on the validation split; the epoch
  with the highest F1 (earliest on ties) is kept as the best;
* training stops once more than ``patience`` consecutive epochs fail to
  improve on the best F1;
* only ``splits.train`` and ``splits.val`` patients are selected from the
  dataset, so the test split is never seen here.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import torch
from torch import Tensor

from disentlab.config.models import TrainConfig
from disentlab.errors import (
    ConfigError,
    DataError,
    NonFiniteError,
    TrainingAbortedError,
    UndefinedMetricError,
)
from disentlab.fairaudit.metrics import auroc, f1
from disentlab.gradcore.gradcheck import compute_grads
from disentlab.gradcore.network import Architecture, LatentPair, ModelParams, encode
from disentlab.gradcore.optim import AdamHyper, AdamState, adam_step
from disentlab.losses.disentangle import calibrate_noise_sigma
from disentlab.losses.total import baseline_objective, disentangled_objective
from disentlab.synthgen.augment import random_augment
from disentlab.synthgen.dataset import Dataset, SplitAssignment
from disentlab.trainer.history import EpochRecord, TrainHistory
from disentlab.trainer.predict import batch_slices, predict_scores
from disentlab.trainer.state import (
    TrainingState,
    check_resumable,
    load_state,
    save_state,
)
from disentlab.trainer.weights import compute_class_weights

logger = logging.getLogger(__name__)


class _Run:
    """Data, labels and objective of one training run."""

    def __init__(
        self, dataset: Dataset, splits: SplitAssignment, config: TrainConfig
    ) -> None:
        self.config = config
        self.train = dataset.for_patients(splits.train)
        self.val = dataset.for_patients(splits.val)
        if len(self.train) == 0 or len(self.val) == 0:
            raise DataError(
                f"Training needs non-empty train and val splits, got "
                f"{len(self.train)} and {len(self.val)} samples."
            )
        channels, height, width = dataset.image_shape
        if height != width:
            raise DataError(f"Images must be square, got {height}x{width}.")
        self.arch = Architecture(config.mode, channels, height, config.latent_dim)
        configured = config.loss.class_weights
        self.class_weights = (
            configured
            if configured is not None
            else compute_class_weights(self.train.dr)
        )
        self.target = config.target_sa if config.mode == "disentangled" else None
        self.sigma: float | None = None

    def loss(
        self,
        params: ModelParams,
        images: Tensor,
        part: Dataset,
        idx: np.ndarray,
        seed: int,
    ) -> Tensor:
        weights = self.config.loss
        y_med = torch.from_numpy(part.dr[idx])
        if self.target is None:
            return baseline_objective(
                params, images, y_med, weights, self.class_weights
            )
        assert self.sigma is not None
        y_sensit = torch.from_numpy(part.sa(self.target)[idx])
        total, _ = disentangled_objective(
            params,
            images,
            y_med,
            y_sensit,
            weights,
            self.class_weights,
            self.sigma,
            seed,
        )
        return total

    def calibrate(self, params: ModelParams) -> float | None:
        """Latent noise scale for the coming epoch (disentangled mode only)."""
        if self.target is None:
            return None
        if self.config.loss.noise_sigma is not None:
            return self.config.loss.noise_sigma
        med, sensit = [], []
        with torch.no_grad():
            for part in batch_slices(len(self.train), self.config.eval_batch_size):
                images = torch.from_numpy(self.train.images[part]).to(params.dtype)
                latents = encode(params, images)
                med.append(latents.z_med)
                sensit.append(latents.z_sensit)
        pair = LatentPair(torch.cat(med), torch.cat(sensit))  # type: ignore[arg-type]
        return calibrate_noise_sigma(pair, self.config.loss.noise_scale)

    def validation_loss(self, params: ModelParams, seed: int) -> float:
        total = 0.0
        n = len(self.val)
        with torch.no_grad():
            for b, part in enumerate(batch_slices(n, self.config.eval_batch_size)):
                idx = np.arange(part.start, part.stop)
                images = torch.from_numpy(self.val.images[part]).to(params.dtype)
                loss = self.loss(params, images, self.val, idx, seed + b)
                total += float(loss) * idx.size
        return total / n


def _augment_batch(
    images: np.ndarray,
    idx: np.ndarray,
    seeds: np.ndarray,
    config: TrainConfig,
    pool: ThreadPoolExecutor | None,
) -> Tensor:
    jobs = [(images[i], int(s)) for i, s in zip(idx, seeds)]

    def one(job: tuple[np.ndarray, int]) -> np.ndarray:
        return random_augment(job[0], config.aug, job[1])

    out = list(pool.map(one, jobs)) if pool is not None else [one(j) for j in jobs]
    return torch.from_numpy(np.stack(out))


def _fresh_state(run: _Run) -> TrainingState:
    config = run.config
    params = ModelParams.initialize(run.arch, config.seed)
    hyper = AdamHyper(lr=config.effective_lr, weight_decay=config.weight_decay)
    return TrainingState(
        config=config,
        params=params,
        adam=AdamState.zeros_like(params, hyper),
        best_params=params.clone(),
    )


def _fit(
    dataset: Dataset,
    splits: SplitAssignment,
    config: TrainConfig,
    checkpoint: str | Path | None,
    resume: str | Path | None,
    workers: int,
) -> tuple[ModelParams, TrainHistory]:
    run = _Run(dataset, splits, config)
    if resume is not None:
        state = load_state(resume)
        check_resumable(state.config, config)
        state.config = config
        logger.info("Resuming %s training at epoch %d", config.mode, state.next_epoch)
    else:
        state = _fresh_state(run)

    n = len(run.train)
    batch_size = config.effective_batch_size
    val_labels = run.val.dr
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        epoch = state.next_epoch
        while epoch < config.epochs_max and not state.stopped:
            started = time.perf_counter()
            order_seq, aug_seq, noise_seq = np.random.SeedSequence(
                [config.seed, epoch]
            ).spawn(3)
            order = np.random.default_rng(order_seq).permutation(n)
            aug_seeds = np.random.default_rng(aug_seq).integers(0, 2**63, size=n)
            noise_seed = int(np.random.default_rng(noise_seq).integers(0, 2**62))
            run.sigma = run.calibrate(state.params)

            running = 0.0
            for b, start in enumerate(range(0, n, batch_size)):
                idx = order[start : start + batch_size]
                images = _augment_batch(
                    run.train.images,
                    idx,
                    aug_seeds[start : start + batch_size],
                    config,
                    pool,
                )
                try:
                    loss, grads = compute_grads(
                        lambda p: run.loss(p, images, run.train, idx, noise_seed + b),
                        state.params,
                    )
                    if not bool(torch.isfinite(loss)):
                        raise TrainingAbortedError(epoch, b, f"loss is {float(loss)}")
                    state.adam, state.params = adam_step(
                        state.adam, state.params, grads
                    )
                except NonFiniteError as exc:
                    raise TrainingAbortedError(epoch, b, str(exc)) from exc
                running += float(loss) * idx.size

            scores = predict_scores(state.params, run.val, config.eval_batch_size)
            val_f1 = f1((scores > config.threshold).astype(np.int64), val_labels)
            try:
                val_auroc: float | None = auroc(scores, val_labels)
            except UndefinedMetricError:
                val_auroc = None
            record = EpochRecord(
                epoch=epoch,
                train_loss=running / n,
                val_loss=run.validation_loss(state.params, noise_seed + 2**61),
                val_f1=val_f1,
                val_auroc=val_auroc,
                noise_sigma=run.sigma,
                wall_clock=time.perf_counter() - started,
            )
            state.records.append(record)
            if val_f1 > state.best_f1:
                state.best_f1 = val_f1
                state.best_epoch = epoch
                state.best_params = state.params.clone()
                state.stale = 0
            else:
                state.stale += 1
            state.stopped = state.stale > config.patience
            state.next_epoch = epoch + 1
            logger.info(
                "%s epoch %d: train %.4f, val %.4f, F1 %.4f, AUROC %s%s",
                config.mode,
                epoch,
                record.train_loss,
                record.val_loss,
                val_f1,
                "N/A" if val_auroc is None else f"{val_auroc:.4f}",
                " (best)" if state.best_epoch == epoch else "",
            )
            if checkpoint is not None:
                save_state(state, checkpoint)
            epoch += 1
    finally:
        if pool is not None:
            pool.shutdown()

    if state.stopped:
        logger.info(
            "Early stop after epoch %d; restoring epoch %d (F1 %.4f)",
            state.next_epoch - 1,
            state.best_epoch,
            state.best_f1,
        )
    history = TrainHistory(
        records=tuple(state.records),
        best_epoch=state.best_epoch,
        stopped_epoch=state.next_epoch - 1,
        early_stopped=state.stopped,
    )
    return state.best_params, history


def train_baseline(
    dataset: Dataset,
    splits: SplitAssignment,
    config: TrainConfig,
    *,
    checkpoint: str | Path | None = None,
    resume: str | Path | None = None,
    workers: int = 1,
) -> tuple[ModelParams, TrainHistory]:
    """Train the DR head on the concatenated latent with class-weighted focal loss.

    Returns the best-epoch parameters and the history.

    Raises
    ------
    ConfigError
        If ``config.mode`` is not ``baseline``.
    TrainingAbortedError
        If a loss or gradient becomes non-finite.
    """
    if config.mode != "baseline":
        raise ConfigError(f"train_baseline needs mode=baseline, got {config.mode}.")
    return _fit(dataset, splits, config, checkpoint, resume, workers)


def train_disentangled(
    dataset: Dataset,
    splits: SplitAssignment,
    config: TrainConfig,
    *,
    checkpoint: str | Path | None = None,
    resume: str | Path | None = None,
    workers: int = 1,
) -> tuple[ModelParams, TrainHistory]:
    """Train the full network on the weighted total objective.

    ``c_sensit`` is supervised on ``config.target_sa``; early stopping and
    inference use the DR head on ``z_med``.

    Raises
    ------
    ConfigError
        If ``config.mode`` is not ``disentangled``.
    TrainingAbortedError
        If a loss or gradient becomes non-finite.
    """
    if config.mode != "disentangled":
        raise ConfigError(
            f"train_disentangled needs mode=disentangled, got {config.mode}."
        )
    return _fit(dataset, splits, config, checkpoint, resume, workers)


def train(
    dataset: Dataset,
    splits: SplitAssignment,
    config: TrainConfig,
    **kwargs: object,
) -> tuple[ModelParams, TrainHistory]:
    """Dispatch on ``config.mode``."""
    fn = train_baseline if config.mode == "baseline" else train_disentangled
    return fn(dataset, splits, config, **kwargs)  # type: ignore[arg-type]
