"""SVG rendering of audit figures."""

from disentlab.render.charts import (
    ChartSpec,
    CompiledChart,
    Series,
    compile_chart,
    render_svg,
)
from disentlab.render.figures import (
    auroc_chart,
    dca_chart,
    disparity_compare_chart,
    risk_chart,
    write_audit_figures,
    write_comparison_figure,
)

__all__ = [
    "ChartSpec",
    "CompiledChart",
    "Series",
    "auroc_chart",
    "compile_chart",
    "dca_chart",
    "disparity_compare_chart",
    "render_svg",
    "risk_chart",
    "write_audit_figures",
    "write_comparison_figure",
]
