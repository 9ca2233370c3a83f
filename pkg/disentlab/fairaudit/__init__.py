"""Group-fairness audit: subgroup metrics, decision curves, risk plots, probes."""

from disentlab.fairaudit.dca import DEFAULT_THRESHOLDS, DecisionCurve, decision_curve
from disentlab.fairaudit.io import (
    read_audit,
    read_predictions,
    write_audit,
    write_comparison,
    write_predictions,
)
from disentlab.fairaudit.metrics import (
    auroc,
    balanced_accuracy,
    bootstrap_auroc_ci,
    confusion,
    f1,
)
from disentlab.fairaudit.probe import ProbeResult, probe_all_sas, probe_leakage
from disentlab.fairaudit.records import PredictionRecord
from disentlab.fairaudit.report import (
    AuditReport,
    ComparisonReport,
    DeltaRow,
    SAReport,
    SubgroupMetrics,
    audit,
    compare_reports,
    subgroup_report,
)
from disentlab.fairaudit.risk import RiskHistogram, risk_distribution

__all__ = [
    "DEFAULT_THRESHOLDS",
    "AuditReport",
    "ComparisonReport",
    "DecisionCurve",
    "DeltaRow",
    "PredictionRecord",
    "ProbeResult",
    "RiskHistogram",
    "SAReport",
    "SubgroupMetrics",
    "audit",
    "auroc",
    "balanced_accuracy",
    "bootstrap_auroc_ci",
    "compare_reports",
    "confusion",
    "decision_curve",
    "f1",
    "probe_all_sas",
    "probe_leakage",
    "read_audit",
    "read_predictions",
    "risk_distribution",
    "subgroup_report",
    "write_audit",
    "write_comparison",
    "write_predictions",
]
