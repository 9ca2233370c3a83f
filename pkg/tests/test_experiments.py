"""Desk-scale experiments on the confound dial, run from the shipped config.

Each seed trains a baseline and a disentangled model for several minutes, so
the module is deselected with ``-m "not slow"``. The first run records its
numbers in ``tests/baselines/experiments_pilot.json``; later runs must stay
within ``PILOT_TOLERANCE`` of that record (``--update-baselines`` rewrites it).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pytest

from disentlab.cli import resolve_config, with_mode
from disentlab.fairaudit import auroc, probe_leakage
from disentlab.gradcore import ModelParams
from disentlab.synthgen import Dataset, generate_dataset, split_dataset
from disentlab.trainer import TrainHistory, extract_latents, predict_scores, train
from tests.conftest import load_baseline, save_baseline

pytestmark = pytest.mark.slow

CONFIG = Path(__file__).parents[1] / "configs" / "experiment.cfg"
SHIPPED_SEED = 7
SEEDS = (7, 8, 9)
PILOT_FILE = "experiments_pilot.json"
PILOT_TOLERANCE = 0.05

# Thresholds hold exactly at the shipped seed and within PILOT_TOLERANCE at the
# other seeds.
MIN_BASELINE_AUROC = 0.85
MIN_BASELINE_LEAK = 0.75
MIN_LEAK_DROP = 0.10
MAX_AUROC_COST = 0.05


@dataclass
class Experiment:
    seed: int
    primary_sa: str
    dataset: Dataset
    test: Dataset
    runs: dict[str, tuple[ModelParams, TrainHistory]]
    metrics: dict[str, float] = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return 0.0 if self.seed == SHIPPED_SEED else PILOT_TOLERANCE


def _measure(exp: Experiment) -> dict[str, float]:
    test, groups = exp.test, exp.test.patient_ids
    sa = test.sa(exp.primary_sa)
    baseline, _ = exp.runs["baseline"]
    disentangled, _ = exp.runs["disentangled"]

    def leak(params: ModelParams, which: str) -> float:
        latent = extract_latents(params, test, which)
        return probe_leakage(latent, sa, exp.seed, groups=groups)

    return {
        "baseline_auroc": auroc(predict_scores(baseline, test), test.dr),
        "baseline_leak": leak(baseline, "joint"),
        "disentangled_auroc": auroc(predict_scores(disentangled, test), test.dr),
        "z_med_leak": leak(disentangled, "med"),
        "z_sensit_leak": leak(disentangled, "sensit"),
    }


@pytest.fixture(scope="module", params=SEEDS, ids=lambda s: f"seed{s}")
def experiment(request: pytest.FixtureRequest) -> Experiment:
    config = resolve_config(str(CONFIG), request.param)
    dataset = generate_dataset(config.gen)
    splits = split_dataset(dataset, config.split.fractions, seed=config.split.seed)
    runs = {
        mode: train(
            dataset, splits, with_mode(config.train, mode, config.gen.primary_sa)
        )
        for mode in ("baseline", "disentangled")
    }
    exp = Experiment(
        seed=request.param,
        primary_sa=config.gen.primary_sa,
        dataset=dataset,
        test=dataset.for_patients(splits.test),
        runs=runs,
    )
    exp.metrics = _measure(exp)
    return exp


class TestShortcut:
    def test_sa_is_readable_from_pixels(self, experiment: Experiment) -> None:
        data = experiment.dataset
        pixels = data.images.reshape(len(data), -1)
        leak = probe_leakage(
            pixels, data.sa(experiment.primary_sa), 0, groups=data.patient_ids
        )
        assert leak > 0.9

    def test_baseline_learns_the_shortcut(self, experiment: Experiment) -> None:
        m, slack = experiment.metrics, experiment.slack
        assert m["baseline_auroc"] >= MIN_BASELINE_AUROC - slack
        assert m["baseline_leak"] >= MIN_BASELINE_LEAK - slack


class TestDisentanglement:
    def test_sa_leaves_z_med(self, experiment: Experiment) -> None:
        m = experiment.metrics
        assert m["baseline_leak"] - m["z_med_leak"] >= MIN_LEAK_DROP - experiment.slack

    def test_dr_cost_is_bounded(self, experiment: Experiment) -> None:
        m = experiment.metrics
        cost = m["baseline_auroc"] - m["disentangled_auroc"]
        assert cost <= MAX_AUROC_COST + experiment.slack

    def test_z_sensit_carries_the_target(self, experiment: Experiment) -> None:
        assert experiment.metrics["z_sensit_leak"] > 0.5


class TestTrainingCurves:
    @pytest.mark.parametrize("mode", ["baseline", "disentangled"])
    def test_best_epoch_beats_first_epoch(
        self, experiment: Experiment, mode: str
    ) -> None:
        _, history = experiment.runs[mode]
        assert history.best_epoch > 0
        assert history.best.train_loss < history.records[0].train_loss

    @pytest.mark.parametrize("mode", ["baseline", "disentangled"])
    def test_losses_are_finite(self, experiment: Experiment, mode: str) -> None:
        _, history = experiment.runs[mode]
        assert all(np.isfinite(r.train_loss) for r in history.records)


class TestPilotRecord:
    def test_matches_pilot(
        self, experiment: Experiment, update_baselines: bool
    ) -> None:
        stored = load_baseline(PILOT_FILE)
        record = json.loads(stored) if stored else {}
        key = str(experiment.seed)
        measured = {k: round(v, 6) for k, v in experiment.metrics.items()}
        if update_baselines or key not in record:
            record[key] = measured
            save_baseline(PILOT_FILE, json.dumps(record, indent=2, sort_keys=True))
            pytest.skip(f"Recorded pilot numbers for seed {key}")
        for name, value in measured.items():
            assert value == pytest.approx(record[key][name], abs=PILOT_TOLERANCE), name
