"""Tests for class weights, the training loops, checkpoints and inference."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from disentlab.config import AugmentationConfig, TrainConfig
from disentlab.errors import CheckpointFormatError, ConfigError, DataError
from disentlab.fairaudit import f1
from disentlab.gradcore import (
    AdamHyper,
    AdamState,
    Architecture,
    ModelParams,
    adam_step,
    classify_med,
    classify_sensit,
    compute_grads,
    encode,
)
from disentlab.losses import classification_loss
from disentlab.synthgen import Dataset, SplitAssignment, split_dataset
from disentlab.trainer import (
    TrainHistory,
    compute_class_weights,
    extract_latents,
    load_model,
    load_state,
    predict,
    predict_scores,
    save_model,
    train,
    train_baseline,
    train_disentangled,
    write_history,
)
from disentlab.trainer.history import HISTORY_COLUMNS
from disentlab.trainer.state import check_resumable


@pytest.fixture
def splits(small_dataset: Dataset) -> SplitAssignment:
    return split_dataset(small_dataset, (0.7, 0.15, 0.15), seed=0)


def _stopping_rule(f1s: list[float], patience: int) -> tuple[int, int]:
    """(best epoch, number of epochs run) under the early-stopping rule."""
    best, best_epoch, stale = float("-inf"), -1, 0
    for epoch, value in enumerate(f1s):
        if value > best:
            best, best_epoch, stale = value, epoch, 0
        else:
            stale += 1
        if stale > patience:
            return best_epoch, epoch + 1
    return best_epoch, len(f1s)


# ---------------------------------------------------------------------------
# Class weights
# ---------------------------------------------------------------------------


class TestClassWeights:
    def test_inverse_frequency(self) -> None:
        weights = compute_class_weights(np.array([0, 0, 0, 1]))
        assert weights == pytest.approx((4 / 6, 2.0))

    def test_balanced_is_ones(self) -> None:
        assert compute_class_weights(np.array([0, 1, 1, 0])) == (1.0, 1.0)

    def test_absent_class(self) -> None:
        with pytest.raises(DataError, match="Referable"):
            compute_class_weights(np.zeros(5, dtype=int))

    def test_empty(self) -> None:
        with pytest.raises(DataError, match="empty"):
            compute_class_weights(np.array([], dtype=int))

    def test_configured_weights_replace_inverse_frequency(
        self, small_dataset, splits, quick_train_config
    ) -> None:
        config = quick_train_config.model_copy(update={"epochs_max": 1})
        fitted = compute_class_weights(small_dataset.for_patients(splits.train).dr)
        heavy = (1.0, 25.0)
        assert heavy != pytest.approx(fitted)
        loss = config.loss.model_copy(update={"class_weights": heavy})
        _, default = train(small_dataset, splits, config)
        _, weighted = train(
            small_dataset, splits, config.model_copy(update={"loss": loss})
        )
        assert weighted.records[0].train_loss != default.records[0].train_loss

    def test_configured_weights_equal_to_fitted_change_nothing(
        self, small_dataset, splits, quick_train_config
    ) -> None:
        config = quick_train_config.model_copy(update={"epochs_max": 1})
        fitted = compute_class_weights(small_dataset.for_patients(splits.train).dr)
        loss = config.loss.model_copy(update={"class_weights": fitted})
        _, default = train(small_dataset, splits, config)
        _, pinned = train(
            small_dataset, splits, config.model_copy(update={"loss": loss})
        )
        assert pinned.records[0].train_loss == default.records[0].train_loss


# ---------------------------------------------------------------------------
# Training loops
# ---------------------------------------------------------------------------


class TestBaselineTraining:
    def test_history_shape(self, small_dataset, splits, quick_train_config) -> None:
        params, history = train_baseline(small_dataset, splits, quick_train_config)
        assert isinstance(history, TrainHistory)
        assert [r.epoch for r in history.records] == [0, 1]
        assert history.best.val_f1 == max(r.val_f1 for r in history.records)
        assert all(np.isfinite(r.train_loss) for r in history.records)
        assert all(r.noise_sigma is None for r in history.records)
        assert params.arch.mode == "baseline"

    def test_deterministic(self, small_dataset, splits, quick_train_config) -> None:
        first, h1 = train(small_dataset, splits, quick_train_config)
        second, h2 = train(small_dataset, splits, quick_train_config)
        assert first.equal(second)
        assert h1 == h2

    def test_workers_do_not_change_result(
        self, small_dataset, splits, quick_train_config
    ) -> None:
        serial, _ = train(small_dataset, splits, quick_train_config, workers=1)
        threaded, _ = train(small_dataset, splits, quick_train_config, workers=3)
        assert serial.equal(threaded)

    def test_early_stopping_rule(
        self, small_dataset, splits, quick_train_config
    ) -> None:
        config = quick_train_config.model_copy(update={"epochs_max": 6, "patience": 0})
        _, history = train(small_dataset, splits, config)
        f1s = [r.val_f1 for r in history.records]
        best_epoch, n_run = _stopping_rule(f1s, patience=0)
        assert len(history.records) == n_run
        assert history.best_epoch == best_epoch
        assert history.early_stopped == (n_run < 6)
        if history.early_stopped:
            # The last epoch did not improve on the best.
            assert f1s[-1] <= max(f1s[:-1])

    def test_restored_params_reproduce_best_f1(
        self, small_dataset, splits, quick_train_config
    ) -> None:
        config = quick_train_config.model_copy(update={"epochs_max": 5, "patience": 1})
        best, history = train(small_dataset, splits, config)
        val = small_dataset.for_patients(splits.val)
        scores = predict_scores(best, val, config.eval_batch_size)
        y_hat = (scores > config.threshold).astype(np.int64)
        assert f1(y_hat, val.dr) == history.best.val_f1

    def test_test_split_is_never_read(
        self, small_dataset, splits, quick_train_config
    ) -> None:
        images = small_dataset.images.copy()
        test_rows = small_dataset.meta["patient_id"].isin(splits.test).to_numpy()
        images[test_rows] = 1.0 - images[test_rows]
        altered = Dataset(images, small_dataset.meta)
        original, _ = train(small_dataset, splits, quick_train_config)
        changed, _ = train(altered, splits, quick_train_config)
        assert original.equal(changed)

    def test_wrong_mode(self, small_dataset, splits, quick_train_config) -> None:
        with pytest.raises(ConfigError, match="mode=disentangled"):
            train_disentangled(small_dataset, splits, quick_train_config)

    def test_empty_validation_split(
        self, small_dataset, splits, quick_train_config
    ) -> None:
        broken = SplitAssignment(
            train=splits.train, val=frozenset(), test=splits.test | splits.val
        )
        with pytest.raises(DataError, match="non-empty"):
            train(small_dataset, broken, quick_train_config)


class TestDisentangledTraining:
    def test_one_epoch(self, small_dataset, splits, quick_train_config) -> None:
        config = quick_train_config.model_copy(
            update={"mode": "disentangled", "target_sa": "age", "epochs_max": 1}
        )
        params, history = train(small_dataset, splits, config)
        assert params.arch.mode == "disentangled"
        assert len(history.records) == 1
        sigma = history.records[0].noise_sigma
        assert sigma is not None and sigma > 0
        assert np.isfinite(history.records[0].val_loss)

    def test_fixed_noise_sigma(self, small_dataset, splits, quick_train_config) -> None:
        loss = quick_train_config.loss.model_copy(update={"noise_sigma": 0.25})
        config = quick_train_config.model_copy(
            update={
                "mode": "disentangled",
                "target_sa": "sex",
                "epochs_max": 1,
                "loss": loss,
            }
        )
        _, history = train(small_dataset, splits, config)
        assert history.records[0].noise_sigma == 0.25

    @pytest.fixture
    def classifier_only(self, quick_train_config) -> TrainConfig:
        """Disentangled run whose objective is the two classification terms."""
        loss = quick_train_config.loss.model_copy(
            update={
                "lambda_r": 0.0,
                "lambda_d": 0.0,
                "lambda_leak": 0.0,
                "noise_sigma": 0.1,
            }
        )
        return quick_train_config.model_copy(
            update={
                "mode": "disentangled",
                "target_sa": "age",
                "batch_size": 100_000,
                "weight_decay": 0.0,
                "aug": AugmentationConfig(enabled=False),
                "loss": loss,
            }
        )

    def test_first_step_matches_hand_update(
        self, small_dataset, splits, classifier_only
    ) -> None:
        config = classifier_only.model_copy(update={"epochs_max": 1})
        part = small_dataset.for_patients(splits.train)
        # The loop's epoch-0 batch order.
        order_seq, _, _ = np.random.SeedSequence([config.seed, 0]).spawn(3)
        order = np.random.default_rng(order_seq).permutation(len(part))
        images = torch.from_numpy(part.images[order])
        y_med = torch.from_numpy(part.dr[order])
        y_sensit = torch.from_numpy(part.sa("age")[order])
        class_weights = compute_class_weights(part.dr)

        def objective(p: ModelParams) -> torch.Tensor:
            latents = encode(p, images)
            return classification_loss(
                classify_med(p, latents.z_med),
                y_med,
                classify_sensit(p, latents.z_sensit),
                y_sensit,
                config.loss,
                class_weights,
            )

        arch = Architecture("disentangled", 3, 16, config.latent_dim)
        start = ModelParams.initialize(arch, config.seed)
        loss, grads = compute_grads(objective, start)
        hyper = AdamHyper(lr=config.effective_lr, weight_decay=config.weight_decay)
        _, expected = adam_step(AdamState.zeros_like(start, hyper), start, grads)

        trained, history = train(small_dataset, splits, config)
        assert history.records[0].train_loss == pytest.approx(float(loss), rel=1e-6)
        for name, tensor in expected:
            torch.testing.assert_close(trained[name], tensor, rtol=0.0, atol=1e-6)

    def test_decoder_is_frozen_without_image_terms(
        self, small_dataset, splits, classifier_only
    ) -> None:
        config = classifier_only.model_copy(update={"epochs_max": 3, "patience": 5})
        trained, history = train(small_dataset, splits, config)
        start = ModelParams.initialize(trained.arch, config.seed)
        for name, tensor in trained.group("decoder").items():
            assert torch.equal(tensor, start[f"decoder.{name}"]), name
        assert not torch.equal(trained["c_med.weight"], start["c_med.weight"])
        assert len(history.records) == 3

    def test_baseline_entry_rejects_disentangled(
        self, small_dataset, splits, quick_train_config
    ) -> None:
        config = quick_train_config.model_copy(
            update={"mode": "disentangled", "target_sa": "age"}
        )
        with pytest.raises(ConfigError, match="mode=baseline"):
            train_baseline(small_dataset, splits, config)


# ---------------------------------------------------------------------------
# Checkpoints and resume
# ---------------------------------------------------------------------------


class TestResume:
    def test_resume_matches_uninterrupted_run(
        self, small_dataset, splits, quick_train_config, tmp_path
    ) -> None:
        full_config = quick_train_config.model_copy(update={"epochs_max": 3})
        short_config = quick_train_config.model_copy(update={"epochs_max": 1})
        checkpoint = tmp_path / "state.ckpt"

        uninterrupted, full_history = train(small_dataset, splits, full_config)
        train(small_dataset, splits, short_config, checkpoint=checkpoint)
        assert load_state(checkpoint).next_epoch == 1
        resumed, resumed_history = train(
            small_dataset, splits, full_config, resume=checkpoint
        )
        assert resumed.equal(uninterrupted)
        assert resumed_history.records == full_history.records
        assert resumed_history.best_epoch == full_history.best_epoch

    def test_state_round_trip(
        self, small_dataset, splits, quick_train_config, tmp_path
    ) -> None:
        checkpoint = tmp_path / "state.ckpt"
        best, history = train(
            small_dataset, splits, quick_train_config, checkpoint=checkpoint
        )
        state = load_state(checkpoint)
        assert state.config == quick_train_config
        assert state.next_epoch == 2
        assert tuple(state.records) == history.records
        assert state.best_epoch == history.best_epoch
        assert state.best_params.equal(best)
        assert state.adam.step > 0
        # A state file also serves as a model file: its best parameters load.
        assert load_model(checkpoint).equal(best)

    def test_changed_settings_refuse_resume(self, quick_train_config) -> None:
        other = quick_train_config.model_copy(update={"lr": 5e-4})
        with pytest.raises(ConfigError, match="lr"):
            check_resumable(quick_train_config, other)
        longer = quick_train_config.model_copy(update={"epochs_max": 9})
        check_resumable(quick_train_config, longer)

    def test_model_file_is_not_a_state(
        self, small_dataset, splits, quick_train_config, tmp_path
    ) -> None:
        config = quick_train_config.model_copy(update={"epochs_max": 1})
        params, _ = train(small_dataset, splits, config)
        path = tmp_path / "model.ckpt"
        save_model(params, path, config)
        assert load_model(path).equal(params)
        with pytest.raises(CheckpointFormatError, match="not a training state"):
            load_state(path)


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


class TestInference:
    @pytest.fixture
    def trained(self, small_dataset, splits, quick_train_config):
        config = quick_train_config.model_copy(update={"epochs_max": 1})
        params, _ = train(small_dataset, splits, config)
        return params

    def test_predict_records(self, trained, small_dataset, splits) -> None:
        test = small_dataset.for_patients(splits.test)
        records = predict(trained, test, threshold=0.5)
        assert len(records) == len(test)
        assert {r.patient_id for r in records} <= splits.test
        for record in records:
            assert 0.0 <= record.score <= 1.0
            assert record.y_hat == int(record.score > 0.5)
        assert [r.y_true for r in records] == test.dr.tolist()

    def test_batch_size_does_not_change_scores(self, trained, small_dataset) -> None:
        whole = predict_scores(trained, small_dataset, batch_size=500)
        chunked = predict_scores(trained, small_dataset, batch_size=7)
        np.testing.assert_allclose(whole, chunked, rtol=0, atol=1e-6)

    def test_latent_shapes(self, trained, small_dataset) -> None:
        n = len(small_dataset)
        assert extract_latents(trained, small_dataset, "med").shape == (n, 4)
        assert extract_latents(trained, small_dataset, "sensit").shape == (n, 4)
        assert extract_latents(trained, small_dataset, "joint").shape == (n, 8)

    def test_unknown_latent(self, trained, small_dataset) -> None:
        with pytest.raises(ValueError, match="Unknown latent"):
            extract_latents(trained, small_dataset, "both")  # type: ignore[arg-type]


class TestHistoryFile:
    def test_columns_and_best_flag(
        self, small_dataset, splits, quick_train_config, tmp_path
    ) -> None:
        _, history = train(small_dataset, splits, quick_train_config)
        path = write_history(history, tmp_path / "history.csv")
        lines = path.read_text().splitlines()
        assert lines[0].split(",") == list(HISTORY_COLUMNS)
        assert len(lines) == 1 + len(history.records)
        flags = [int(line.split(",")[-1]) for line in lines[1:]]
        assert flags.count(1) == 1
        assert flags.index(1) == history.best_epoch
        # Baseline runs have no latent noise.
        assert all(line.split(",")[5] == "N/A" for line in lines[1:])
