"""Tests for dataset generation, splitting, augmentation and dataset files."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from disentlab._types import SA_NAMES
from disentlab.config import AugmentationConfig, GeneratorConfig
from disentlab.errors import (
    CountMismatchError,
    DataError,
    DatasetFormatError,
    InfeasibleConfoundError,
    MalformedHeaderError,
    TruncatedTensorError,
)
from disentlab.fairaudit import auroc
from disentlab.synthgen import (
    AugmentParams,
    augment,
    binarize_icdr,
    dataset_hash,
    draw_params,
    empirical_correlation,
    generate_dataset,
    joint_table,
    load_dataset,
    random_augment,
    save_dataset,
    split_dataset,
    split_prevalence,
)
from disentlab.synthgen.io import IMAGES_FILE, META_FILE, decode_images, encode_images
from tests.conftest import make_dataset

# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


class TestJointTable:
    def test_marginals_preserved(self) -> None:
        table = joint_table(0.18, 0.2, 0.9)
        # Rows: SA group, columns: DR.
        assert table.sum() == pytest.approx(1.0)
        assert table[:, 1].sum() == pytest.approx(0.18)
        assert table[1, :].sum() == pytest.approx(0.2)

    def test_zero_rho_is_independent(self) -> None:
        table = joint_table(0.3, 0.4, 0.0)
        assert table[1, 1] == pytest.approx(0.12)

    def test_infeasible_rho_names_bounds(self) -> None:
        # Max rho for prevalence 0.18 and marginal 0.5 is about 0.4685.
        with pytest.raises(InfeasibleConfoundError, match=r"0\.468"):
            joint_table(0.18, 0.5, 0.99)


class TestBinarize:
    @pytest.mark.parametrize(
        ("grade", "label"), [(0, 0), (1, 0), (2, 1), (3, 1), (4, 1)]
    )
    def test_icdr_threshold(self, grade: int, label: int) -> None:
        assert binarize_icdr(grade) == label

    def test_out_of_range(self) -> None:
        with pytest.raises(ValueError):
            binarize_icdr(5)


class TestGenerateDataset:
    def test_shapes_and_ids(self, small_dataset) -> None:
        assert len(small_dataset) == 120
        assert small_dataset.image_shape == (3, 16, 16)
        assert small_dataset.images.dtype == np.float32
        assert small_dataset.meta["image_id"].iloc[0] == "P00000-0"
        assert small_dataset.meta["patient_id"].nunique() == 60

    def test_pixels_in_unit_range(self, small_dataset) -> None:
        assert small_dataset.images.min() >= 0.0
        assert small_dataset.images.max() <= 1.0

    def test_labels_constant_per_patient(self, small_dataset) -> None:
        columns = ["dr", *SA_NAMES]
        per_patient = small_dataset.meta.groupby("patient_id")[columns].nunique()
        assert (per_patient == 1).all().all()

    def test_same_seed_same_bytes(self, small_gen_config) -> None:
        a = generate_dataset(small_gen_config)
        b = generate_dataset(small_gen_config)
        assert a.equals(b)

    def test_workers_do_not_change_output(self, small_gen_config) -> None:
        assert generate_dataset(small_gen_config, workers=3).equals(
            generate_dataset(small_gen_config, workers=1)
        )

    def test_different_seed_differs(self, small_gen_config) -> None:
        other = small_gen_config.model_copy(update={"seed": 4})
        assert not generate_dataset(other).equals(generate_dataset(small_gen_config))

    def test_planted_correlation(self) -> None:
        config = GeneratorConfig(
            n_patients=2000,
            images_per_patient=1,
            image_size=8,
            confound_rho=0.9,
            seed=11,
        )
        data = generate_dataset(config)
        rho = empirical_correlation(data.sa("age"), data.dr)
        assert rho == pytest.approx(0.9, abs=0.01)
        assert data.dr.mean() == pytest.approx(0.18, abs=0.001)
        # Non-primary SAs are filled independently of DR.
        assert abs(empirical_correlation(data.sa("sex"), data.dr)) < 0.1

    def test_confound_dial_is_monotone(self) -> None:
        correlations, shortcut = [], []
        for rho in (0.0, 0.3, 0.6, 0.9):
            config = GeneratorConfig(
                n_patients=2500,
                images_per_patient=1,
                image_size=8,
                confound_rho=rho,
                seed=21,
            )
            data = generate_dataset(config)
            age = data.sa("age")
            correlations.append(empirical_correlation(age, data.dr))
            # AUROC of the age label used as a DR score.
            shortcut.append(auroc(age.astype(float), data.dr))
        assert correlations == sorted(correlations)
        assert len(set(correlations)) == 4
        assert shortcut == sorted(shortcut)
        assert correlations == pytest.approx([0.0, 0.3, 0.6, 0.9], abs=0.03)

    def test_other_primary_sa(self) -> None:
        config = GeneratorConfig(
            n_patients=1000,
            images_per_patient=1,
            image_size=8,
            primary_sa="sex",
            confound_rho=-0.3,
            seed=2,
        )
        data = generate_dataset(config)
        assert empirical_correlation(data.sa("sex"), data.dr) == pytest.approx(
            -0.3, abs=0.02
        )

    def test_infeasible_config(self) -> None:
        config = GeneratorConfig(
            n_patients=10,
            confound_rho=0.99,
            dr_prevalence=0.18,
            sa_marginals={"age": 0.5},
        )
        with pytest.raises(InfeasibleConfoundError):
            generate_dataset(config)

    def test_age_tint_is_visible(self) -> None:
        config = GeneratorConfig(
            n_patients=200, images_per_patient=1, image_size=16, sa_feature_strength=0.3
        )
        data = generate_dataset(config)
        red_minus_blue = data.images[:, 0].mean(axis=(1, 2)) - data.images[:, 2].mean(
            axis=(1, 2)
        )
        older = data.sa("age") == 1
        assert red_minus_blue[older].mean() > red_minus_blue[~older].mean()

    def test_single_channel(self) -> None:
        data = generate_dataset(
            GeneratorConfig(
                n_patients=5, images_per_patient=1, image_size=8, channels=1
            )
        )
        assert data.image_shape == (1, 8, 8)


# ---------------------------------------------------------------------------
# Split
# ---------------------------------------------------------------------------


class TestSplit:
    def test_patient_disjoint_and_complete(self, small_dataset) -> None:
        splits = split_dataset(small_dataset, seed=5)
        assert not splits.train & splits.val
        assert not splits.train & splits.test
        assert not splits.val & splits.test
        everyone = set(small_dataset.meta["patient_id"])
        assert splits.train | splits.val | splits.test == everyone

    def test_sizes_follow_fractions(self) -> None:
        data = make_dataset(1000, 0.2, seed=0)
        splits = split_dataset(data, (0.7, 0.1, 0.2), seed=0)
        assert (len(splits.train), len(splits.val), len(splits.test)) == (700, 100, 200)

    def test_deterministic(self, small_dataset) -> None:
        first = split_dataset(small_dataset, seed=9)
        assert first == split_dataset(small_dataset, seed=9)

    def test_stratification_over_random_datasets(self) -> None:
        rng = np.random.default_rng(123)
        for trial in range(100):
            n = int(rng.integers(1000, 3000))
            prevalence = float(rng.uniform(0.1, 0.5))
            data = make_dataset(n, prevalence, seed=trial)
            splits = split_dataset(data, seed=trial)
            overall = float(data.dr.mean())
            assert not splits.train & splits.test
            for value in split_prevalence(data, splits).values():
                assert abs(value - overall) <= 0.02

    def test_multiple_images_per_patient_stay_together(self) -> None:
        data = make_dataset(300, 0.3, seed=1, images_per_patient=3)
        splits = split_dataset(data, seed=1)
        frame = data.with_splits(splits).meta
        assert (frame.groupby("patient_id")["split"].nunique() == 1).all()

    def test_split_round_trips_through_column(self, small_dataset) -> None:
        splits = split_dataset(small_dataset, seed=2)
        assert small_dataset.with_splits(splits).splits() == splits
        assert small_dataset.splits() is None

    def test_empty_split_rejected(self) -> None:
        with pytest.raises(DataError, match="val"):
            split_dataset(make_dataset(4, 0.5, seed=0), (0.8, 0.0, 0.2))

    def test_bad_fractions(self, small_dataset) -> None:
        with pytest.raises(ValueError, match="sum to 1"):
            split_dataset(small_dataset, (0.5, 0.5, 0.5))


# ---------------------------------------------------------------------------
# Augmentation
# ---------------------------------------------------------------------------


class TestAugment:
    @pytest.fixture
    def image(self) -> np.ndarray:
        rng = np.random.default_rng(0)
        return rng.uniform(0.1, 0.9, size=(3, 8, 8)).astype(np.float32)

    def test_identity_params(self, image: np.ndarray) -> None:
        out = augment(image, AugmentParams())
        assert np.array_equal(out, image)
        assert out is not image

    def test_hflip(self, image: np.ndarray) -> None:
        out = augment(image, AugmentParams(hflip=True))
        assert np.array_equal(out, image[:, :, ::-1])

    def test_four_quarter_turns(self, image: np.ndarray) -> None:
        out = image
        for _ in range(4):
            out = augment(out, AugmentParams(quarter_turns=1))
        assert np.array_equal(out, image)

    def test_brightness_clamped(self, image: np.ndarray) -> None:
        out = augment(image, AugmentParams(brightness_delta=2.0))
        assert np.all(out == 1.0)

    def test_contrast_keeps_mean(self, image: np.ndarray) -> None:
        out = augment(image, AugmentParams(contrast_scale=0.5))
        assert out.mean() == pytest.approx(image.mean(), abs=1e-5)
        assert out.std() == pytest.approx(0.5 * image.std(), rel=1e-4)

    def test_blur_smooths(self, image: np.ndarray) -> None:
        out = augment(image, AugmentParams(blur_sigma=1.0))
        assert out.std() < image.std()
        assert out.shape == image.shape

    def test_random_augment_deterministic(self, image: np.ndarray) -> None:
        config = AugmentationConfig()
        a = random_augment(image, config, 42)
        b = random_augment(image, config, 42)
        assert np.array_equal(a, b)

    def test_disabled_returns_copy(self, image: np.ndarray) -> None:
        out = random_augment(image, AugmentationConfig(enabled=False), 1)
        assert np.array_equal(out, image)

    def test_draw_params_respects_ranges(self) -> None:
        config = AugmentationConfig(rotate=False, brightness=0.1, contrast=0.2)
        rng = np.random.default_rng(3)
        for _ in range(50):
            params = draw_params(config, rng)
            assert params.quarter_turns == 0
            assert abs(params.brightness_delta) <= 0.1
            assert 0.8 <= params.contrast_scale <= 1.2
            assert 0.0 <= params.blur_sigma <= config.blur_max_sigma


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


class TestDatasetFiles:
    def test_save_load(self, small_dataset, tmp_path) -> None:
        data = small_dataset.with_splits(split_dataset(small_dataset))
        save_dataset(data, tmp_path)
        loaded = load_dataset(tmp_path)
        assert np.array_equal(loaded.images, data.images)
        pd.testing.assert_frame_equal(loaded.meta, data.meta, check_dtype=False)
        assert loaded.splits() == data.splits()

    def test_missing_sa_written_empty(self, small_dataset, tmp_path) -> None:
        meta = small_dataset.meta.copy()
        meta.loc[0, "education"] = -1
        data = type(small_dataset)(small_dataset.images, meta)
        save_dataset(data, tmp_path)
        first_row = (tmp_path / META_FILE).read_text().splitlines()[1].split(",")
        header = (tmp_path / META_FILE).read_text().splitlines()[0].split(",")
        assert first_row[header.index("education")] == ""
        assert load_dataset(tmp_path).sa("education")[0] == -1

    def test_hash_is_stable(self, small_dataset, tmp_path) -> None:
        save_dataset(small_dataset, tmp_path / "a")
        save_dataset(small_dataset, tmp_path / "b")
        assert dataset_hash(tmp_path / "a") == dataset_hash(tmp_path / "b")

    def test_bad_magic(self) -> None:
        data = encode_images(np.zeros((1, 1, 8, 8), dtype=np.float32))
        with pytest.raises(MalformedHeaderError, match="magic"):
            decode_images(b"X" + data[1:])

    def test_truncated(self) -> None:
        data = encode_images(np.zeros((2, 1, 8, 8), dtype=np.float32))
        with pytest.raises(TruncatedTensorError):
            decode_images(data[:-4])

    def test_trailing_bytes(self) -> None:
        data = encode_images(np.zeros((1, 1, 8, 8), dtype=np.float32))
        with pytest.raises(DatasetFormatError, match="trailing"):
            decode_images(data + b"\0\0\0\0")

    def test_count_mismatch(self, small_dataset, tmp_path) -> None:
        save_dataset(small_dataset, tmp_path)
        (tmp_path / IMAGES_FILE).write_bytes(encode_images(small_dataset.images[:-1]))
        with pytest.raises(CountMismatchError):
            load_dataset(tmp_path)

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path)

    def test_bad_meta_header(self, small_dataset, tmp_path) -> None:
        save_dataset(small_dataset, tmp_path)
        text = (tmp_path / META_FILE).read_text().replace("patient_id", "patient", 1)
        (tmp_path / META_FILE).write_text(text)
        with pytest.raises(DatasetFormatError, match="header"):
            load_dataset(tmp_path)
