"""Audit figures: decision curves, risk distributions and AUROC disparity bars."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from disentlab.fairaudit.report import (
    ALL_GROUPS,
    OVERALL,
    AuditReport,
    ComparisonReport,
    SAReport,
)
from disentlab.render.charts import ChartSpec, Series, render_svg
from disentlab.render.palette import series_color

logger = logging.getLogger(__name__)

# Net benefit below this is clipped so that treat-all does not flatten the plot.
DCA_FLOOR = -0.05


def _clip(values: np.ndarray) -> list[float | None]:
    return [max(float(v), DCA_FLOOR) for v in values]


def _group_label(report: AuditReport, sa: str, group: str) -> str:
    """Legend text of a subgroup; unknown groups fall back to their id."""
    if sa == OVERALL:
        return "all patients"
    try:
        return report.per_sa[sa].group(group).label
    except KeyError:
        return group


def dca_chart(report: AuditReport, sa: str) -> ChartSpec | None:
    """Decision curves of every subgroup of *sa*, with treat-all and treat-none.

    Returns None when no subgroup of *sa* has records.
    """
    curves = sorted((key, c) for key, c in report.dca.items() if key[0] == sa)
    if not curves:
        return None
    series = []
    top = 0.0
    for i, ((_, group), curve) in enumerate(curves):
        series.append(
            Series(
                name=_group_label(report, sa, group),
                x=curve.thresholds.tolist(),
                y=_clip(curve.net_benefit_model),
                color=series_color(i),
            )
        )
        top = max(top, curve.prevalence)
    # Treat-all depends on prevalence; the pooled curve stands for all groups.
    pooled = report.dca.get((OVERALL, ALL_GROUPS), curves[0][1])
    series.append(
        Series(
            name="treat all",
            x=pooled.thresholds.tolist(),
            y=_clip(pooled.net_benefit_treat_all),
            dashed=True,
            color="#7B7573",
        )
    )
    series.append(
        Series(
            name="treat none",
            x=pooled.thresholds.tolist(),
            y=pooled.net_benefit_treat_none.tolist(),
            dashed=True,
            color="#222222",
        )
    )
    return ChartSpec(
        kind="line",
        title=f"Decision curves by {sa}",
        x_label="Threshold probability",
        y_label="Net benefit",
        series=series,
        x_range=(0.0, 1.0),
        y_range=(DCA_FLOOR, max(top, 0.05)),
    )


def risk_chart(report: AuditReport, sa: str, group: str) -> ChartSpec | None:
    """Overlapping histograms of scores for true Normal and true Referable."""
    hist = report.risk.get((sa, group))
    if hist is None or int(hist.counts_normal.sum() + hist.counts_referable.sum()) == 0:
        return None
    left = hist.edges[:-1].tolist()
    return ChartSpec(
        kind="histogram",
        title=f"Risk distribution, {sa}: {_group_label(report, sa, group)}",
        x_label="Predicted risk of referable DR",
        y_label="Images",
        series=[
            Series(name="Normal", x=left, y=hist.counts_normal.astype(float).tolist()),
            Series(
                name="Referable",
                x=left,
                y=hist.counts_referable.astype(float).tolist(),
            ),
        ],
        x_range=(0.0, 1.0),
    )


def auroc_chart(sa_report: SAReport) -> ChartSpec:
    """AUROC of each subgroup of one SA; undefined AUROC shows as N/A."""
    gap = (
        "N/A"
        if sa_report.disparity is None
        else f"{100 * sa_report.disparity:.1f} points"
    )
    return ChartSpec(
        kind="bars",
        title=f"AUROC by {sa_report.sa} (disparity {gap})",
        x_label=sa_report.sa,
        y_label="AUROC",
        categories=[g.label for g in sa_report.groups],
        series=[Series(name="AUROC", y=[g.auroc for g in sa_report.groups])],
        y_range=(0.0, 1.0),
    )


def disparity_compare_chart(comparison: ComparisonReport) -> ChartSpec:
    """Baseline and disentangled AUROC disparity side by side for each SA."""
    rows = [r for r in comparison.rows if r.metric == "disparity"]
    if not rows:
        raise ValueError("Comparison has no disparity rows to plot.")
    return ChartSpec(
        kind="bars",
        title="AUROC disparity across sensitive attributes",
        x_label="Sensitive attribute",
        y_label="AUROC disparity (max - min)",
        categories=[r.sa for r in rows],
        series=[
            Series(name="baseline", y=[r.baseline for r in rows]),
            Series(name="disentangled", y=[r.disentangled for r in rows]),
        ],
    )


def _write(spec: ChartSpec, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_svg(spec), encoding="utf-8")
    return path


def write_audit_figures(report: AuditReport, out_dir: str | Path) -> list[Path]:
    """Write ``dca_<sa>.svg``, ``risk_<sa>_<group>.svg`` and ``auroc_<sa>.svg``.

    Subgroups without records get no risk plot; a warning is logged instead.
    """
    out = Path(out_dir)
    written: list[Path] = []
    for sa, sa_report in report.per_sa.items():
        spec = dca_chart(report, sa)
        if spec is None:
            logger.warning("No records for any %s subgroup; DCA plot omitted", sa)
        else:
            written.append(_write(spec, out / f"dca_{sa}.svg"))
        for metrics in sa_report.groups:
            risk = risk_chart(report, sa, metrics.group)
            if risk is None:
                logger.warning(
                    "Subgroup %s=%s is empty; risk plot omitted", sa, metrics.label
                )
                continue
            written.append(_write(risk, out / f"risk_{sa}_{metrics.group}.svg"))
        written.append(_write(auroc_chart(sa_report), out / f"auroc_{sa}.svg"))
    logger.info("Wrote %d figures to %s", len(written), out)
    return written


def write_comparison_figure(comparison: ComparisonReport, out_dir: str | Path) -> Path:
    """Write ``disparity_compare.svg`` into *out_dir* and return its path."""
    out = Path(out_dir) / "disparity_compare.svg"
    return _write(disparity_compare_chart(comparison), out)
