"""Command-line tool: ``disentlab <synth|train|audit|compare|all>``.

Every command writes a ``manifest.json`` next to its outputs echoing the
configuration, the input dataset hash, the seeds, a SHA-256 of every file
written and wall-clock timings. Exit codes: 0 success, 1 invalid input or
configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import logging
import os
import sys
import time
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import pandas as pd
import torch
from pydantic import BaseModel, Field, ValidationError

from disentlab import __version__
from disentlab.config import ExperimentConfig, TrainConfig, load_config
from disentlab.errors import ConfigError, DisentlabError
from disentlab.fairaudit import (
    AuditReport,
    audit,
    compare_reports,
    probe_all_sas,
    read_audit,
    read_predictions,
    write_audit,
    write_comparison,
    write_predictions,
)
from disentlab.fairaudit.io import STORED_DIGITS
from disentlab.render import write_audit_figures, write_comparison_figure
from disentlab.synthgen import (
    Dataset,
    dataset_hash,
    generate_dataset,
    load_dataset,
    save_dataset,
    split_dataset,
)
from disentlab.trainer import (
    extract_latents,
    predict,
    save_model,
    train,
    write_history,
)

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
THREADS_ENV = "TOOL_THREADS"

# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


class ExperimentManifest(BaseModel):
    """Provenance of one command run."""

    version: str = __version__
    command: str
    config: dict[str, Any] = Field(default_factory=dict)
    inputs: dict[str, str] = Field(default_factory=dict)
    seeds: dict[str, int] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    timings: dict[str, float] = Field(default_factory=dict)


def file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(manifest: ExperimentManifest, out_dir: Path) -> Path:
    """Hash the files directly in *out_dir* (not the manifest) and write it."""
    manifest.outputs = {
        str(p.relative_to(out_dir)): file_sha256(p)
        for p in sorted(out_dir.iterdir())
        if p.is_file() and p.name != MANIFEST_FILE
    }
    path = out_dir / MANIFEST_FILE
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def worker_count() -> int:
    """Worker cap from ``TOOL_THREADS``; defaults to 1."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(
            f"{THREADS_ENV} must be a positive integer, got {raw!r}."
        ) from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {value}.")
    return value


# ---------------------------------------------------------------------------
# Config helpers
# ---------------------------------------------------------------------------


def resolve_config(path: str | None, seed: int | None) -> ExperimentConfig:
    """Load *path* (or defaults) and apply a ``--seed`` override to every stage."""
    config = load_config(path) if path else ExperimentConfig()
    if seed is None:
        return config
    data = config.model_dump()
    for section in ("gen", "split", "train"):
        data[section]["seed"] = seed
    data["audit"]["bootstrap_seed"] = seed
    data["audit"]["probe_seed"] = seed
    return ExperimentConfig.model_validate(data)


def with_mode(config: TrainConfig, mode: str, default_target: str) -> TrainConfig:
    data = config.model_dump()
    data["mode"] = mode
    if mode == "disentangled" and data["target_sa"] is None:
        data["target_sa"] = default_target
    return TrainConfig.model_validate(data)


def _seeds(config: ExperimentConfig) -> dict[str, int]:
    return {
        "gen": config.gen.seed,
        "split": config.split.seed,
        "train": config.train.seed,
        "bootstrap": config.audit.bootstrap_seed,
        "probe": config.audit.probe_seed,
    }


def _single_input(inputs: list[str] | None, command: str) -> Path:
    if not inputs or len(inputs) != 1:
        raise ConfigError(f"'{command}' takes exactly one --in path.")
    path = Path(inputs[0])
    if not path.exists():
        raise FileNotFoundError(f"Input not found: {path}")
    return path


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_synth(config: ExperimentConfig, out_dir: Path, workers: int = 1) -> Dataset:
    """Generate the dataset with its split column and write it to *out_dir*."""
    started = time.perf_counter()
    dataset = generate_dataset(config.gen, workers=workers)
    splits = split_dataset(dataset, config.split.fractions, config.split.seed)
    dataset = dataset.with_splits(splits)
    save_dataset(dataset, out_dir)
    manifest = ExperimentManifest(
        command="synth",
        config=config.model_dump(mode="json", include={"gen", "split"}),
        seeds=_seeds(config),
        timings={"total_s": time.perf_counter() - started},
    )
    write_manifest(manifest, out_dir)
    return dataset


def _probe_rows(params: Any, test: Dataset, config: ExperimentConfig) -> pd.DataFrame:
    if config.train.mode == "baseline":
        latents = {"joint": extract_latents(params, test, "joint")}
    else:
        latents = {
            "z_med": extract_latents(params, test, "med"),
            "z_sensit": extract_latents(params, test, "sensit"),
        }
    sa_table = {name: test.sa(name) for name in config.audit.sa_names}
    rows = []
    for latent_name, features in latents.items():
        results = probe_all_sas(
            features, sa_table, config.audit.probe_seed, groups=test.patient_ids
        )
        for result in results:
            rows.append(
                {
                    "latent": latent_name,
                    "sa": result.sa,
                    "auroc": result.auroc,
                    "balanced_accuracy": result.balanced_accuracy,
                    "n_train": result.n_train,
                    "n_test": result.n_test,
                }
            )
    return pd.DataFrame(
        rows,
        columns=["latent", "sa", "auroc", "balanced_accuracy", "n_train", "n_test"],
    )


def cmd_train(
    dataset_dir: Path,
    config: ExperimentConfig,
    out_dir: Path,
    resume: Path | None = None,
    workers: int = 1,
) -> Path:
    """Train one model; returns the path of ``predictions.csv`` (test split)."""
    started = time.perf_counter()
    dataset = load_dataset(dataset_dir)
    splits = dataset.splits()
    if splits is None:
        logger.info(
            "Dataset has no split column; splitting with seed %d", config.split.seed
        )
        splits = split_dataset(dataset, config.split.fractions, config.split.seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    params, history = train(
        dataset,
        splits,
        config.train,
        checkpoint=out_dir / "state.ckpt",
        resume=resume,
        workers=workers,
    )
    trained = time.perf_counter()
    save_model(params, out_dir / "model.ckpt", config.train)
    write_history(history, out_dir / "history.csv")
    test = dataset.for_patients(splits.test)
    records = predict(
        params, test, config.train.threshold, batch_size=config.train.eval_batch_size
    )
    predictions = write_predictions(records, out_dir / "predictions.csv")
    _probe_rows(params, test, config).to_csv(
        out_dir / "probe.csv",
        index=False,
        float_format="%.6g",
        na_rep="N/A",
        lineterminator="\n",
    )
    manifest = ExperimentManifest(
        command="train",
        config=config.model_dump(mode="json", include={"split", "train"}),
        inputs={"dataset": dataset_hash(dataset_dir)},
        seeds=_seeds(config),
        timings={
            "train_s": trained - started,
            "total_s": time.perf_counter() - started,
        },
    )
    write_manifest(manifest, out_dir)
    logger.info(
        "Trained %s model: best epoch %d, %d test predictions",
        config.train.mode,
        history.best_epoch,
        len(records),
    )
    return predictions


def cmd_audit(
    predictions_path: Path, config: ExperimentConfig, out_dir: Path, workers: int = 1
) -> Path:
    """Audit a predictions file into CSV tables and SVG figures."""
    _run_audit(predictions_path, config, out_dir, workers)
    return out_dir


def _run_audit(
    predictions_path: Path, config: ExperimentConfig, out_dir: Path, workers: int
) -> AuditReport:
    started = time.perf_counter()
    records = read_predictions(predictions_path)
    report = audit(records, config.audit, workers=workers)
    write_audit(report, out_dir)
    write_audit_figures(report, out_dir)
    manifest = ExperimentManifest(
        command="audit",
        config=config.model_dump(mode="json", include={"audit"}),
        inputs={"predictions": file_sha256(predictions_path)},
        seeds=_seeds(config),
        timings={"total_s": time.perf_counter() - started},
    )
    write_manifest(manifest, out_dir)
    return report


def cmd_compare(
    baseline_dir: Path,
    disentangled_dir: Path,
    out_dir: Path,
    reports: tuple[AuditReport, AuditReport] | None = None,
) -> Path:
    """Compare two audit directories; writes compare.csv, summary.txt and a figure.

    Without *reports* the metrics are read back from each ``audit.csv``, which
    stores them to ``STORED_DIGITS`` significant digits, and the summary says
    so. ``all`` passes the in-memory reports instead.
    """
    started = time.perf_counter()
    for directory in (baseline_dir, disentangled_dir):
        if not directory.is_dir():
            raise FileNotFoundError(f"Audit directory not found: {directory}")
    if reports is None:
        comparison = compare_reports(
            read_audit(baseline_dir), read_audit(disentangled_dir)
        )
        comparison = dataclasses.replace(
            comparison,
            summary=comparison.summary
            + f"Deltas use audit.csv values stored to {STORED_DIGITS} "
            "significant digits.\n",
        )
    else:
        comparison = compare_reports(*reports)
    write_comparison(comparison, out_dir)
    write_comparison_figure(comparison, out_dir)
    manifest = ExperimentManifest(
        command="compare",
        inputs={
            "baseline": file_sha256(baseline_dir / "audit.csv"),
            "disentangled": file_sha256(disentangled_dir / "audit.csv"),
        },
        timings={"total_s": time.perf_counter() - started},
    )
    write_manifest(manifest, out_dir)
    sys.stdout.write(comparison.summary)
    return out_dir


def cmd_all(config: ExperimentConfig, out_dir: Path, workers: int = 1) -> Path:
    """synth, baseline and disentangled training, both audits and the comparison.

    Output tree: ``data/``, ``baseline/``, ``disentangled/`` (each holding an
    ``audit/`` directory) and ``compare/``.
    """
    data_dir = out_dir / "data"
    cmd_synth(config, data_dir, workers)
    reports = {}
    for mode in ("baseline", "disentangled"):
        run_config = config.model_copy(
            update={"train": with_mode(config.train, mode, config.gen.primary_sa)}
        )
        predictions = cmd_train(data_dir, run_config, out_dir / mode, workers=workers)
        reports[mode] = _run_audit(
            predictions, run_config, out_dir / mode / "audit", workers
        )
    return cmd_compare(
        out_dir / "baseline" / "audit",
        out_dir / "disentangled" / "audit",
        out_dir / "compare",
        reports=(reports["baseline"], reports["disentangled"]),
    )


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disentlab",
        description="Synthetic fundus data, disentangled training and fairness audits.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "generate a synthetic dataset with a planted SA confound",
        "train": "train a baseline or disentangled model on a dataset",
        "audit": "audit a predictions.csv per sensitive attribute",
        "compare": "compare a baseline audit with a disentangled audit",
        "all": "run the full pipeline end to end",
    }
    for name, text in helps.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", help="key=value configuration file")
        cmd.add_argument(
            "--in",
            dest="inputs",
            action="append",
            help="input path (dataset dir, predictions.csv or audit dir; "
            "compare takes two)",
        )
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--resume", help="training state checkpoint to resume from")
        cmd.add_argument("--seed", type=int, help="override every seed in the config")
        cmd.add_argument(
            "--log-level",
            default="INFO",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        )
    return parser


def _dispatch(args: argparse.Namespace) -> None:
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError(f"--seed must be in [0, 2**64), got {args.seed}.")
    workers = worker_count()
    torch.set_num_threads(workers)
    out_dir = Path(args.out)
    if args.resume and args.command != "train":
        raise ConfigError("--resume only applies to the 'train' command.")

    if args.command == "compare":
        if not args.inputs or len(args.inputs) != 2:
            raise ConfigError(
                "'compare' takes two --in audit directories: baseline first."
            )
        cmd_compare(Path(args.inputs[0]), Path(args.inputs[1]), out_dir)
        return

    config = resolve_config(args.config, args.seed)
    commands: dict[str, Callable[[], object]] = {
        "synth": lambda: cmd_synth(config, out_dir, workers),
        "train": lambda: cmd_train(
            _single_input(args.inputs, "train"),
            config,
            out_dir,
            Path(args.resume) if args.resume else None,
            workers,
        ),
        "audit": lambda: cmd_audit(
            _single_input(args.inputs, "audit"), config, out_dir, workers
        ),
        "all": lambda: cmd_all(config, out_dir, workers),
    }
    commands[args.command]()


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
    )
    try:
        _dispatch(args)
    except ValidationError as exc:
        logger.error("Invalid configuration: %s", exc)
        return 1
    except DisentlabError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except FileNotFoundError as exc:
        logger.error("%s", exc)
        return 1
    except ValueError as exc:
        logger.error("%s", exc)
        return 1
    except (OSError, RuntimeError, FloatingPointError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
