"""CSV files of the audit: predictions, audit table, DCA, risk and comparison.

Report numbers are written with 6 significant digits and undefined values
as ``N/A``. Predictions keep full precision so that audits of a saved file
reproduce audits of the in-memory records.
"""

from __future__ import annotations

import io
import logging
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from disentlab._types import MISSING, SA_NAMES, Confusion
from disentlab.errors import SchemaError
from disentlab.fairaudit.records import (
    PREDICTION_COLUMNS,
    PredictionRecord,
    frame_to_records,
    records_to_frame,
)
from disentlab.fairaudit.report import (
    ALL_GROUPS,
    OVERALL,
    AuditReport,
    ComparisonReport,
    SAReport,
    SubgroupMetrics,
)

logger = logging.getLogger(__name__)

NA = "N/A"
STORED_DIGITS = 6
FLOAT_FORMAT = f"%.{STORED_DIGITS}g"

AUDIT_COLUMNS: tuple[str, ...] = (
    "sa",
    "group",
    "label",
    "n",
    "n_pos",
    "n_neg",
    "n_missing",
    "auroc",
    "auroc_ci_low",
    "auroc_ci_high",
    "balanced_accuracy",
    "f1",
    "tp",
    "fp",
    "fn",
    "tn",
    "fpr",
    "fnr",
    "disparity",
)
DCA_COLUMNS = (
    "group",
    "threshold",
    "n",
    "prevalence",
    "net_benefit_model",
    "net_benefit_treat_all",
    "net_benefit_treat_none",
)
RISK_COLUMNS = ("bin_low", "bin_high", "count_normal", "count_referable")
COMPARE_COLUMNS = ("metric", "sa", "group", "baseline", "disentangled", "delta")


def _write_frame(
    frame: pd.DataFrame,
    path: Path,
    float_format: str | None = FLOAT_FORMAT,
    na_rep: str = NA,
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path,
        index=False,
        float_format=float_format,
        na_rep=na_rep,
        lineterminator="\n",
    )
    return path


def _float_or_nan(value: float | None) -> float:
    return math.nan if value is None else float(value)


# ---------------------------------------------------------------------------
# Predictions
# ---------------------------------------------------------------------------


def write_predictions(records: Sequence[PredictionRecord], path: str | Path) -> Path:
    frame = records_to_frame(records)
    for name in SA_NAMES:
        frame[name] = frame[name].astype("Int64").mask(frame[name] == MISSING)
    # Missing SA values are empty cells.
    return _write_frame(
        frame[list(PREDICTION_COLUMNS)], Path(path), float_format=None, na_rep=""
    )


def _bad(
    path: Path, row: int, column: str, value: object, expected: str
) -> SchemaError:
    # +2: one for the header line, one for 1-based numbering.
    return SchemaError(
        f"{path}: row {row + 2}, column '{column}': got {value!r}, expected {expected}."
    )


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    """Parse ``predictions.csv``, validating every cell.

    Raises
    ------
    SchemaError
        On a wrong header or an invalid value, with row and column context.
    """
    source = Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"Predictions file not found: {source}")
    frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    if tuple(frame.columns) != PREDICTION_COLUMNS:
        raise SchemaError(
            f"{source}: header is {','.join(frame.columns)}, expected "
            f"{','.join(PREDICTION_COLUMNS)}."
        )
    out = pd.DataFrame(
        {"image_id": frame["image_id"], "patient_id": frame["patient_id"]}
    )
    for column in ("y_true", "y_hat"):
        values = frame[column]
        bad = ~values.isin(["0", "1"])
        if bad.any():
            i = int(np.flatnonzero(bad.to_numpy())[0])
            raise _bad(source, i, column, values.iloc[i], "0 or 1")
        out[column] = values.astype(np.int64)
    scores = pd.to_numeric(frame["score"], errors="coerce")
    bad = scores.isna() | (scores < 0) | (scores > 1)
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise _bad(source, i, "score", frame["score"].iloc[i], "a number in [0, 1]")
    # float() parses the repr written above exactly.
    out["score"] = frame["score"].map(float).astype(np.float64)
    for name in SA_NAMES:
        values = frame[name]
        bad = ~values.isin(["0", "1", "", NA])
        if bad.any():
            i = int(np.flatnonzero(bad.to_numpy())[0])
            raise _bad(source, i, name, values.iloc[i], "0, 1 or empty")
        missing = {"": str(MISSING), NA: str(MISSING)}
        out[name] = values.replace(missing).astype(np.int64)
    for i, (image_id, patient_id) in enumerate(zip(out["image_id"], out["patient_id"])):
        if not image_id:
            raise _bad(source, i, "image_id", image_id, "a non-empty id")
        if not patient_id:
            raise _bad(source, i, "patient_id", patient_id, "a non-empty id")
    return frame_to_records(out)


# ---------------------------------------------------------------------------
# Audit report
# ---------------------------------------------------------------------------


def _row(metrics: SubgroupMetrics, n_missing: int, disparity: float | None) -> dict:
    low, high = metrics.auroc_ci if metrics.auroc_ci is not None else (None, None)
    c = metrics.confusion
    return {
        "sa": metrics.sa,
        "group": metrics.group,
        "label": metrics.label,
        "n": metrics.n,
        "n_pos": metrics.n_pos,
        "n_neg": metrics.n_neg,
        "n_missing": n_missing,
        "auroc": _float_or_nan(metrics.auroc),
        "auroc_ci_low": _float_or_nan(low),
        "auroc_ci_high": _float_or_nan(high),
        "balanced_accuracy": _float_or_nan(metrics.balanced_accuracy),
        "f1": _float_or_nan(metrics.f1),
        "tp": c.tp,
        "fp": c.fp,
        "fn": c.fn,
        "tn": c.tn,
        "fpr": _float_or_nan(metrics.fpr),
        "fnr": _float_or_nan(metrics.fnr),
        "disparity": _float_or_nan(disparity),
    }


def audit_frame(report: AuditReport) -> pd.DataFrame:
    rows = [_row(report.overall, 0, None)]
    for sa_report in report.per_sa.values():
        for metrics in sa_report.groups:
            rows.append(_row(metrics, sa_report.n_missing, sa_report.disparity))
    return pd.DataFrame(rows, columns=list(AUDIT_COLUMNS))


def write_audit(report: AuditReport, out_dir: str | Path) -> list[Path]:
    """Write ``audit.csv``, ``dca_<sa>.csv`` and ``risk_<sa>_<group>.csv`` files."""
    root = Path(out_dir)
    written = [_write_frame(audit_frame(report), root / "audit.csv")]

    by_sa: dict[str, list[pd.DataFrame]] = {}
    for (sa, group), curve in report.dca.items():
        by_sa.setdefault(sa, []).append(
            pd.DataFrame(
                {
                    "group": group,
                    "threshold": curve.thresholds,
                    "n": curve.n,
                    "prevalence": curve.prevalence,
                    "net_benefit_model": curve.net_benefit_model,
                    "net_benefit_treat_all": curve.net_benefit_treat_all,
                    "net_benefit_treat_none": curve.net_benefit_treat_none,
                },
                columns=list(DCA_COLUMNS),
            )
        )
    for sa, frames in by_sa.items():
        table = pd.concat(frames, ignore_index=True)
        written.append(_write_frame(table, root / f"dca_{sa}.csv"))

    for (sa, group), hist in report.risk.items():
        frame = pd.DataFrame(
            {
                "bin_low": hist.edges[:-1],
                "bin_high": hist.edges[1:],
                "count_normal": hist.counts_normal,
                "count_referable": hist.counts_referable,
            },
            columns=list(RISK_COLUMNS),
        )
        written.append(_write_frame(frame, root / f"risk_{sa}_{group}.csv"))
    logger.info("Wrote %d audit tables to %s", len(written), root)
    return written


def _opt_float(value: str) -> float | None:
    return None if value in (NA, "") else float(value)


def read_audit(path: str | Path) -> AuditReport:
    """Rebuild the metric tables of an :class:`AuditReport` from ``audit.csv``.

    Curves and histograms are not restored.

    Raises
    ------
    SchemaError
        If the header or a value is invalid.
    """
    source = Path(path)
    if source.is_dir():
        source = source / "audit.csv"
    if not source.is_file():
        raise FileNotFoundError(f"Audit table not found: {source}")
    frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    if tuple(frame.columns) != AUDIT_COLUMNS:
        raise SchemaError(
            f"{source}: header is {','.join(frame.columns)}, expected "
            f"{','.join(AUDIT_COLUMNS)}."
        )
    overall: SubgroupMetrics | None = None
    groups: dict[str, list[SubgroupMetrics]] = {}
    extras: dict[str, tuple[float | None, int]] = {}
    for i, raw in enumerate(frame.to_dict("records")):
        try:
            low = _opt_float(raw["auroc_ci_low"])
            high = _opt_float(raw["auroc_ci_high"])
            metrics = SubgroupMetrics(
                sa=raw["sa"],
                group=raw["group"],
                label=raw["label"],
                n=int(raw["n"]),
                n_pos=int(raw["n_pos"]),
                n_neg=int(raw["n_neg"]),
                auroc=_opt_float(raw["auroc"]),
                auroc_ci=None if low is None or high is None else (low, high),
                balanced_accuracy=_opt_float(raw["balanced_accuracy"]),
                f1=_opt_float(raw["f1"]),
                confusion=Confusion(
                    int(raw["tp"]), int(raw["fp"]), int(raw["fn"]), int(raw["tn"])
                ),
                fpr=_opt_float(raw["fpr"]),
                fnr=_opt_float(raw["fnr"]),
            )
            disparity = _opt_float(raw["disparity"])
            n_missing = int(raw["n_missing"])
        except ValueError as exc:
            raise SchemaError(f"{source}: row {i + 2}: {exc}") from exc
        if metrics.sa == OVERALL and metrics.group == ALL_GROUPS:
            overall = metrics
            continue
        groups.setdefault(metrics.sa, []).append(metrics)
        extras[metrics.sa] = (disparity, n_missing)
    if overall is None:
        raise SchemaError(f"{source}: no '{OVERALL}' row.")
    per_sa = {
        sa: SAReport(
            sa=sa, groups=rows, disparity=extras[sa][0], n_missing=extras[sa][1]
        )
        for sa, rows in groups.items()
    }
    return AuditReport(overall=overall, per_sa=per_sa)


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


def comparison_frame(comparison: ComparisonReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "metric": row.metric,
                "sa": row.sa,
                "group": row.group,
                "baseline": _float_or_nan(row.baseline),
                "disentangled": _float_or_nan(row.disentangled),
                "delta": _float_or_nan(row.delta),
            }
            for row in comparison.rows
        ],
        columns=list(COMPARE_COLUMNS),
    ).astype({"baseline": np.float64, "disentangled": np.float64, "delta": np.float64})


def write_comparison(comparison: ComparisonReport, out_dir: str | Path) -> list[Path]:
    root = Path(out_dir)
    csv_path = _write_frame(comparison_frame(comparison), root / "compare.csv")
    summary_path = root / "summary.txt"
    summary_path.write_text(comparison.summary, encoding="utf-8")
    return [csv_path, summary_path]


def comparison_csv_text(comparison: ComparisonReport) -> str:
    buffer = io.StringIO()
    comparison_frame(comparison).to_csv(
        buffer, index=False, float_format=FLOAT_FORMAT, na_rep=NA, lineterminator="\n"
    )
    return buffer.getvalue()
