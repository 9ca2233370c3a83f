"""Subgroup audit reports and baseline-vs-disentangled comparisons."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from disentlab._types import MISSING, SA_GROUP_LABELS, Confusion, check_sa_name
from disentlab.config.models import AuditConfig
from disentlab.errors import ReportMismatchError, UndefinedMetricError
from disentlab.fairaudit.dca import DecisionCurve, decision_curve
from disentlab.fairaudit.metrics import (
    auroc,
    balanced_accuracy_from,
    bootstrap_auroc_ci,
    confusion,
    f1_from,
    rate,
)
from disentlab.fairaudit.records import PredictionRecord
from disentlab.fairaudit.risk import RiskHistogram, risk_distribution

logger = logging.getLogger(__name__)

OVERALL = "overall"
ALL_GROUPS = "all"


# ---------------------------------------------------------------------------
# Report types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubgroupMetrics:
    """Metrics of one subgroup. Undefined values are None (N/A in tables)."""

    sa: str
    group: str
    label: str
    n: int
    n_pos: int
    n_neg: int
    auroc: float | None
    auroc_ci: tuple[float, float] | None
    balanced_accuracy: float | None
    f1: float | None
    confusion: Confusion
    fpr: float | None
    fnr: float | None


@dataclass(frozen=True)
class SAReport:
    sa: str
    groups: list[SubgroupMetrics]
    disparity: float | None
    n_missing: int

    def group(self, group: str) -> SubgroupMetrics:
        for row in self.groups:
            if row.group == group:
                return row
        raise KeyError(f"No subgroup '{group}' for {self.sa}.")


@dataclass
class AuditReport:
    overall: SubgroupMetrics
    per_sa: dict[str, SAReport]
    threshold: float = 0.5
    dca: dict[tuple[str, str], DecisionCurve] = field(default_factory=dict)
    risk: dict[tuple[str, str], RiskHistogram] = field(default_factory=dict)

    def rows(self) -> list[SubgroupMetrics]:
        out = [self.overall]
        for report in self.per_sa.values():
            out.extend(report.groups)
        return out


# ---------------------------------------------------------------------------
# Metric assembly
# ---------------------------------------------------------------------------


def _arrays(
    records: Sequence[PredictionRecord],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scores = np.array([r.score for r in records], dtype=np.float64)
    labels = np.array([r.y_true for r in records], dtype=np.int64)
    patients = np.array([r.patient_id for r in records], dtype=object)
    return scores, labels, patients


def subgroup_metrics(
    records: Sequence[PredictionRecord],
    sa: str,
    group: str,
    label: str,
    threshold: float = 0.5,
    bootstrap_resamples: int = 0,
    bootstrap_seed: int = 0,
) -> SubgroupMetrics:
    """Metrics of *records* as one subgroup; hard labels are ``score > threshold``."""
    scores, labels, patients = _arrays(records)
    y_hat = (scores > threshold).astype(np.int64)
    c = confusion(y_hat, labels)
    n_pos = int(labels.sum())
    try:
        auc: float | None = auroc(scores, labels)
    except UndefinedMetricError:
        auc = None
    try:
        ba: float | None = balanced_accuracy_from(c)
    except UndefinedMetricError:
        ba = None
    ci = (
        bootstrap_auroc_ci(
            scores, labels, patients, bootstrap_resamples, bootstrap_seed
        )
        if auc is not None
        else None
    )
    return SubgroupMetrics(
        sa=sa,
        group=group,
        label=label,
        n=int(labels.size),
        n_pos=n_pos,
        n_neg=int(labels.size) - n_pos,
        auroc=auc,
        auroc_ci=ci,
        balanced_accuracy=ba,
        f1=f1_from(c) if c.n else None,
        confusion=c,
        fpr=rate(c.fp, c.fp + c.tn),
        fnr=rate(c.fn, c.fn + c.tp),
    )


def disparity(aurocs: Sequence[float | None]) -> float | None:
    """``max - min`` over defined subgroup AUROCs; ``|a0 - a1|`` for two groups."""
    defined = [a for a in aurocs if a is not None]
    if len(defined) < 2:
        return None
    return max(defined) - min(defined)


def split_by_group(
    records: Sequence[PredictionRecord], sa_name: str
) -> tuple[dict[int, list[PredictionRecord]], int]:
    groups: dict[int, list[PredictionRecord]] = {0: [], 1: []}
    n_missing = 0
    for record in records:
        value = record.sa[sa_name]
        if value == MISSING:
            n_missing += 1
        else:
            groups.setdefault(value, []).append(record)
    return groups, n_missing


def subgroup_report(
    records: Sequence[PredictionRecord],
    sa_name: str,
    threshold: float = 0.5,
    bootstrap_resamples: int = 0,
    bootstrap_seed: int = 0,
) -> SAReport:
    """Per-group metrics and AUROC disparity for one SA.

    Records with a missing value for *sa_name* are excluded and counted.
    Groups with a single class get N/A metrics and do not enter the
    disparity.

    Raises
    ------
    ValueError
        If *sa_name* is not one of the five SAs.
    """
    check_sa_name(sa_name)
    groups, n_missing = split_by_group(records, sa_name)
    labels = SA_GROUP_LABELS[sa_name]
    rows = []
    for gid in sorted(groups):
        members = groups[gid]
        if not members:
            logger.warning("Subgroup %s=%d is empty", sa_name, gid)
        elif len({r.y_true for r in members}) < 2:
            logger.warning(
                "Subgroup %s=%d has a single class; AUROC is N/A", sa_name, gid
            )
        rows.append(
            subgroup_metrics(
                members,
                sa_name,
                str(gid),
                labels[gid] if gid < len(labels) else str(gid),
                threshold,
                bootstrap_resamples,
                bootstrap_seed,
            )
        )
    if n_missing:
        logger.info("%s: %d records with missing value excluded", sa_name, n_missing)
    return SAReport(
        sa=sa_name,
        groups=rows,
        disparity=disparity([row.auroc for row in rows]),
        n_missing=n_missing,
    )


def _curves_for(
    records: Sequence[PredictionRecord], sa_name: str, bins: int
) -> tuple[dict[tuple[str, str], DecisionCurve], dict[tuple[str, str], RiskHistogram]]:
    groups, _ = split_by_group(records, sa_name)
    dca: dict[tuple[str, str], DecisionCurve] = {}
    risk: dict[tuple[str, str], RiskHistogram] = {}
    for gid, members in sorted(groups.items()):
        if members:
            dca[(sa_name, str(gid))] = decision_curve(members)
            risk[(sa_name, str(gid))] = risk_distribution(members, bins)
    return dca, risk


def audit(
    records: Sequence[PredictionRecord],
    config: AuditConfig | None = None,
    workers: int = 1,
) -> AuditReport:
    """Full audit: overall and per-SA metrics, decision curves, risk histograms.

    SAs are processed concurrently when ``workers > 1``; results do not
    depend on *workers*.
    """
    config = config or AuditConfig()
    overall = subgroup_metrics(
        records,
        OVERALL,
        ALL_GROUPS,
        "all patients",
        config.threshold,
        config.bootstrap_resamples,
        config.bootstrap_seed,
    )

    def one(sa_name: str) -> tuple[SAReport, dict, dict]:
        report = subgroup_report(
            records,
            sa_name,
            config.threshold,
            config.bootstrap_resamples,
            config.bootstrap_seed,
        )
        dca, risk = _curves_for(records, sa_name, config.risk_bins)
        return report, dca, risk

    names = list(config.sa_names)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, names))
    else:
        parts = [one(name) for name in names]

    report = AuditReport(overall=overall, per_sa={}, threshold=config.threshold)
    if records:
        report.dca[(OVERALL, ALL_GROUPS)] = decision_curve(records)
        report.risk[(OVERALL, ALL_GROUPS)] = risk_distribution(
            records, config.risk_bins
        )
    for name, (sa_report, dca, risk) in zip(names, parts):
        report.per_sa[name] = sa_report
        report.dca.update(dca)
        report.risk.update(risk)
    logger.info(
        "Audited %d records over %d SAs (overall AUROC %s)",
        overall.n,
        len(names),
        "N/A" if overall.auroc is None else f"{overall.auroc:.4f}",
    )
    return report


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaRow:
    metric: str
    sa: str
    group: str
    baseline: float | None
    disentangled: float | None

    @property
    def delta(self) -> float | None:
        if self.baseline is None or self.disentangled is None:
            return None
        return self.disentangled - self.baseline


@dataclass(frozen=True)
class ComparisonReport:
    rows: list[DeltaRow]
    summary: str

    def find(self, metric: str, sa: str = OVERALL, group: str = ALL_GROUPS) -> DeltaRow:
        for row in self.rows:
            if (row.metric, row.sa, row.group) == (metric, sa, group):
                return row
        raise KeyError(f"No comparison row for {metric}/{sa}/{group}.")


def _pct(value: float | None) -> str:
    return "N/A" if value is None else f"{100 * value:.1f}%"


def _points(delta: float | None) -> str:
    return "N/A" if delta is None else f"{100 * delta:+.1f} points"


def _summary(rows: list[DeltaRow]) -> str:
    lines = []
    overall = (("auroc", "Overall AUROC"), ("balanced_accuracy", "Overall BA"))
    for metric, title in overall:
        row = next(r for r in rows if r.metric == metric and r.sa == OVERALL)
        lines.append(
            f"{title} changed from {_pct(row.baseline)} to {_pct(row.disentangled)} "
            f"({_points(row.delta)})."
        )
    disparities = [r for r in rows if r.metric == "disparity"]
    if disparities:
        lines.append("AUROC disparity between subgroups:")
        for row in disparities:
            lines.append(
                f"  {row.sa}: {_pct(row.baseline)} -> {_pct(row.disentangled)} "
                f"({_points(row.delta)})"
            )
    moved = [r for r in disparities if r.delta is not None]
    if moved:
        down = min(moved, key=lambda r: r.delta)  # type: ignore[arg-type, return-value]
        up = max(moved, key=lambda r: r.delta)  # type: ignore[arg-type, return-value]
        if down.delta is not None and down.delta < 0:
            lines.append(
                f"Largest disparity reduction: {down.sa} ({_points(down.delta)})."
            )
        if up.delta is not None and up.delta > 0:
            lines.append(f"Largest disparity increase: {up.sa} ({_points(up.delta)}).")
    return "\n".join(lines) + "\n"


def compare_reports(
    baseline: AuditReport, disentangled: AuditReport
) -> ComparisonReport:
    """Deltas ``disentangled - baseline`` for overall metrics, disparities, AUROCs.

    Raises
    ------
    ReportMismatchError
        If the reports cover different SAs or different subgroups.
    """
    if list(baseline.per_sa) != list(disentangled.per_sa):
        raise ReportMismatchError(
            f"Reports audit different SAs: {', '.join(baseline.per_sa)} vs "
            f"{', '.join(disentangled.per_sa)}. "
            "Audit both with the same audit.sa_names."
        )
    rows = [
        DeltaRow(
            metric,
            OVERALL,
            ALL_GROUPS,
            getattr(baseline.overall, metric),
            getattr(disentangled.overall, metric),
        )
        for metric in ("auroc", "balanced_accuracy", "f1")
    ]
    for sa_name, left in baseline.per_sa.items():
        right = disentangled.per_sa[sa_name]
        left_groups = [g.group for g in left.groups]
        if left_groups != [g.group for g in right.groups]:
            raise ReportMismatchError(
                f"Subgroups of {sa_name} differ: {left_groups} vs "
                f"{[g.group for g in right.groups]}."
            )
        rows.append(
            DeltaRow("disparity", sa_name, ALL_GROUPS, left.disparity, right.disparity)
        )
        for a, b in zip(left.groups, right.groups):
            rows.append(DeltaRow("auroc", sa_name, a.group, a.auroc, b.auroc))
    return ComparisonReport(rows=rows, summary=_summary(rows))
