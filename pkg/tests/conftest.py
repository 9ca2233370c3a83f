"""Shared fixtures and helpers for disentlab tests."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from disentlab._types import MISSING, SA_NAMES
from disentlab.config import GeneratorConfig, TrainConfig
from disentlab.fairaudit.records import PredictionRecord
from disentlab.synthgen import Dataset, generate_dataset
from disentlab.synthgen.dataset import META_COLUMNS

BASELINES_DIR = Path(__file__).parent / "baselines"


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--update-baselines",
        action="store_true",
        default=False,
        help="Regenerate golden files (audit CSVs and experiment pilot numbers).",
    )


@pytest.fixture
def update_baselines(request: pytest.FixtureRequest) -> bool:
    return bool(request.config.getoption("--update-baselines"))


# ---------------------------------------------------------------------------
# Data fixtures
# ---------------------------------------------------------------------------


@pytest.fixture
def small_gen_config() -> GeneratorConfig:
    """60 patients x 2 images at 16x16 with a moderate age confound."""
    return GeneratorConfig(
        n_patients=60,
        images_per_patient=2,
        image_size=16,
        confound_rho=0.5,
        dr_prevalence=0.3,
        seed=3,
    )


@pytest.fixture
def small_dataset(small_gen_config: GeneratorConfig) -> Dataset:
    return generate_dataset(small_gen_config)


@pytest.fixture
def quick_train_config() -> TrainConfig:
    """Two-epoch baseline run small enough for the default test selection."""
    return TrainConfig(
        mode="baseline",
        epochs_max=2,
        patience=5,
        batch_size=16,
        eval_batch_size=64,
        lr=1e-3,
        latent_dim=4,
        seed=1,
    )


def make_dataset(
    n_patients: int,
    prevalence: float,
    seed: int,
    images_per_patient: int = 1,
    size: int = 8,
) -> Dataset:
    """Blank-image dataset with random patient-level DR labels.

    The number of positives is ``round(n_patients * prevalence)`` exactly.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(n_patients * prevalence))
    dr = np.zeros(n_patients, dtype=np.int64)
    dr[rng.choice(n_patients, n_pos, replace=False)] = 1
    k = images_per_patient
    meta = pd.DataFrame(
        {
            "image_id": [f"P{i:05d}-{j}" for i in range(n_patients) for j in range(k)],
            "patient_id": [f"P{i:05d}" for i in range(n_patients) for _ in range(k)],
            "dr": np.repeat(dr, k),
        }
    )
    for name in SA_NAMES:
        meta[name] = np.repeat(rng.integers(0, 2, n_patients), k)
    images = np.zeros((n_patients * k, 1, size, size), dtype=np.float32)
    return Dataset(images, meta[list(META_COLUMNS)])


def make_records(n: int = 200, seed: int = 0) -> list[PredictionRecord]:
    """Deterministic prediction fixture: scores informative of DR, some SA gaps.

    Scores are rounded to 3 decimals so that ties occur; every 17th record
    lacks an education value.
    """
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        y = int(rng.random() < 0.3)
        sa = {name: int(rng.integers(0, 2)) for name in SA_NAMES}
        if i % 17 == 0:
            sa["education"] = MISSING
        shift = 0.25 if y else 0.0
        score = float(np.round(np.clip(rng.random() * 0.75 + shift, 0.0, 1.0), 3))
        records.append(
            PredictionRecord(
                image_id=f"P{i // 2:05d}-{i % 2}",
                patient_id=f"P{i // 2:05d}",
                y_true=y,
                score=score,
                y_hat=int(score > 0.5),
                sa=sa,
            )
        )
    return records


@pytest.fixture
def fixture_records() -> list[PredictionRecord]:
    return make_records()


# ---------------------------------------------------------------------------
# SVG validation helpers
# ---------------------------------------------------------------------------

SVG_NS = "http://www.w3.org/2000/svg"


def assert_valid_svg(svg_string: str) -> ET.Element:
    """Parse SVG and assert it is well-formed XML. Returns the root element."""
    root = ET.fromstring(svg_string.encode("utf-8"))
    assert root.tag == f"{{{SVG_NS}}}svg"
    return root


def count_svg_elements(svg_string: str, tag: str) -> int:
    root = ET.fromstring(svg_string.encode("utf-8"))
    return len(root.findall(f".//{{{SVG_NS}}}{tag}"))


# ---------------------------------------------------------------------------
# Golden files
# ---------------------------------------------------------------------------


def load_baseline(name: str) -> str | None:
    """Golden file text, or None if it has not been generated yet."""
    path = BASELINES_DIR / name
    if path.exists():
        return path.read_text(encoding="utf-8")
    return None


def save_baseline(name: str, content: str) -> None:
    BASELINES_DIR.mkdir(parents=True, exist_ok=True)
    (BASELINES_DIR / name).write_text(content, encoding="utf-8")
