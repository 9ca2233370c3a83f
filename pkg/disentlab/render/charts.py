"""Declarative chart specs compiled to geometry and rendered to SVG.

A :class:`ChartSpec` says *what* to draw (series, axis labels, kind);
:func:`compile_chart` resolves scales, ticks and colours into a
:class:`CompiledChart`; :func:`render_svg` turns that into markup. The
three kinds cover the audit figures: ``line`` (decision curves),
``histogram`` (risk distributions) and ``bars`` (grouped AUROC bars).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from disentlab.render.palette import (
    BACKGROUND,
    GRID_COLOR,
    MIN_GRAPHIC_CONTRAST,
    MIN_TEXT_CONTRAST,
    TEXT_COLOR,
    check_contrast,
    series_color,
)
from disentlab.render.scales import BandScale, LinearScale, format_tick, nice_ticks
from disentlab.render.svg import (
    SvgDocument,
    SvgElement,
    group,
    line,
    polyline,
    rect,
    text,
)

NA_LABEL = "N/A"
FONT = "Helvetica, Arial, sans-serif"

ChartKind = Literal["line", "histogram", "bars"]

# ---------------------------------------------------------------------------
# Spec
# ---------------------------------------------------------------------------


class Series(BaseModel):
    """One named data series. ``None`` in *y* marks an undefined value."""

    model_config = ConfigDict(extra="forbid")

    name: str
    x: list[float] = Field(default_factory=list)
    y: list[float | None]
    dashed: bool = False
    color: str | None = None

    @field_validator("y")
    @classmethod
    def _finite(cls, values: list[float | None]) -> list[float | None]:
        for v in values:
            if v is not None and not math.isfinite(v):
                raise ValueError(f"Series values must be finite or None, got {v}.")
        return values


class ChartSpec(BaseModel):
    """Everything needed to draw one chart.

    ``kind`` selects the geometry: ``lines`` and ``histogram`` read each
    series' ``x``; ``bars`` draws one band per entry of ``categories`` and
    ignores ``x``. Ranges left as None are fitted to the data.
    """

    model_config = ConfigDict(extra="forbid")

    kind: ChartKind
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    series: list[Series]
    categories: list[str] = Field(default_factory=list)
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None
    width: int = Field(default=640, ge=200)
    height: int = Field(default=400, ge=150)
    background: str = BACKGROUND
    text_color: str = TEXT_COLOR

    @model_validator(mode="after")
    def _shape(self) -> ChartSpec:
        if not self.series:
            raise ValueError("A chart needs at least one series.")
        for s in self.series:
            if self.kind == "bars":
                if len(s.y) != len(self.categories):
                    raise ValueError(
                        f"Series '{s.name}' has {len(s.y)} values for "
                        f"{len(self.categories)} categories."
                    )
            elif len(s.x) != len(s.y):
                raise ValueError(
                    f"Series '{s.name}' has {len(s.x)} x values "
                    f"and {len(s.y)} y values."
                )
        if self.kind == "bars" and not self.categories:
            raise ValueError("Bar charts need categories.")
        return self


# ---------------------------------------------------------------------------
# Compiled geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlotArea:
    """Pixel box inside the margins; y grows downwards."""

    left: float
    top: float
    right: float
    bottom: float


@dataclass
class CompiledChart:
    """A chart spec with its scales, ticks and series colours resolved."""

    spec: ChartSpec
    area: PlotArea
    y_scale: LinearScale
    y_ticks: list[float]
    x_scale: LinearScale | None = None
    x_ticks: list[float] = field(default_factory=list)
    band: BandScale | None = None
    colors: list[str] = field(default_factory=list)


def _data_bounds(values: list[float | None]) -> tuple[float, float]:
    defined = [v for v in values if v is not None]
    if not defined:
        return 0.0, 1.0
    return min(defined), max(defined)


def compile_chart(spec: ChartSpec) -> CompiledChart:
    """Resolve layout, scales, ticks and colours.

    Raises
    ------
    ContrastError
        If the text or any series colour is too faint on the background.
    """
    check_contrast(spec.text_color, spec.background, MIN_TEXT_CONTRAST, "Text")
    colors = [s.color or series_color(i) for i, s in enumerate(spec.series)]
    for s, color in zip(spec.series, colors):
        check_contrast(
            color, spec.background, MIN_GRAPHIC_CONTRAST, f"Series '{s.name}'"
        )

    legend_width = 150 if len(spec.series) > 1 else 0
    area = PlotArea(
        left=64.0,
        top=40.0 if spec.title else 20.0,
        right=float(spec.width - 20 - legend_width),
        bottom=float(spec.height - 52),
    )

    if spec.y_range is not None:
        y_lo, y_hi = spec.y_range
    else:
        y_lo, y_hi = _data_bounds([v for s in spec.series for v in s.y])
        if spec.kind != "line":
            y_lo = min(y_lo, 0.0)
    y_ticks = nice_ticks(y_lo, y_hi)
    y_scale = LinearScale(y_ticks[0], y_ticks[-1], area.bottom, area.top)
    compiled = CompiledChart(spec, area, y_scale, y_ticks, colors=colors)

    if spec.kind == "bars":
        compiled.band = BandScale(tuple(spec.categories), area.left, area.right)
    else:
        if spec.x_range is not None:
            x_lo, x_hi = spec.x_range
        else:
            x_lo, x_hi = _data_bounds([x for s in spec.series for x in s.x])
        compiled.x_ticks = [t for t in nice_ticks(x_lo, x_hi) if x_lo <= t <= x_hi]
        compiled.x_scale = LinearScale(x_lo, x_hi, area.left, area.right)
    return compiled


# ---------------------------------------------------------------------------
# SVG output
# ---------------------------------------------------------------------------


def _grid_and_axes(chart: CompiledChart) -> SvgElement:
    """Horizontal grid, tick labels, both axis lines and the axis titles."""
    a, spec = chart.area, chart.spec
    g = group(**{"class": "axes", "font-family": FONT, "font-size": 11})
    for tick in chart.y_ticks:
        y = chart.y_scale(tick)
        g.add(line(a.left, y, a.right, y, stroke=GRID_COLOR, stroke_width=1))
        g.add(
            text(
                format_tick(tick),
                a.left - 6,
                y + 4,
                fill=spec.text_color,
                text_anchor="end",
            )
        )
    if chart.x_scale is not None:
        for tick in chart.x_ticks:
            x = chart.x_scale(tick)
            g.add(line(x, a.bottom, x, a.bottom + 4, stroke=spec.text_color))
            g.add(
                text(
                    format_tick(tick),
                    x,
                    a.bottom + 18,
                    fill=spec.text_color,
                    text_anchor="middle",
                )
            )
    elif chart.band is not None:
        for category in spec.categories:
            x = chart.band(category) + chart.band.bandwidth / 2
            label = text(
                category, x, a.bottom + 18, fill=spec.text_color, text_anchor="middle"
            )
            g.add(label)
    g.add(line(a.left, a.bottom, a.right, a.bottom, stroke=spec.text_color))
    g.add(line(a.left, a.top, a.left, a.bottom, stroke=spec.text_color))
    if spec.x_label:
        g.add(
            text(
                spec.x_label,
                (a.left + a.right) / 2,
                spec.height - 12,
                fill=spec.text_color,
                text_anchor="middle",
                font_size=12,
            )
        )
    if spec.y_label:
        cy = (a.top + a.bottom) / 2
        g.add(
            text(
                spec.y_label,
                16,
                cy,
                fill=spec.text_color,
                text_anchor="middle",
                font_size=12,
                transform=f"rotate(-90 16 {cy:.6g})",
            )
        )
    return g


def _lines(chart: CompiledChart) -> SvgElement:
    assert chart.x_scale is not None
    g = group(**{"class": "series"})
    for s, color in zip(chart.spec.series, chart.colors):
        # Undefined values break the line into separate runs.
        run: list[tuple[float, float]] = []
        runs = [run]
        for x, y in zip(s.x, s.y):
            if y is None:
                run = []
                runs.append(run)
            else:
                run.append((chart.x_scale(x), chart.y_scale(y)))
        for points in runs:
            if len(points) < 2:
                continue
            attrs: dict[str, object] = {
                "fill": "none",
                "stroke": color,
                "stroke_width": 2,
            }
            if s.dashed:
                attrs["stroke_dasharray"] = "6 4"
            g.add(polyline(points, **attrs))
    return g


def _histogram(chart: CompiledChart) -> SvgElement:
    """One translucent rectangle per non-empty bin of every series."""
    assert chart.x_scale is not None
    g = group(**{"class": "series"})
    base = chart.y_scale(max(chart.y_ticks[0], 0.0))
    for s, color in zip(chart.spec.series, chart.colors):
        # x holds bin left edges; bins are evenly spaced.
        width = (s.x[1] - s.x[0]) if len(s.x) > 1 else 1.0
        for x, y in zip(s.x, s.y):
            if y is None or y == 0:
                continue
            left = chart.x_scale(x)
            right = chart.x_scale(x + width)
            top = chart.y_scale(y)
            g.add(
                rect(
                    left,
                    top,
                    right - left,
                    base - top,
                    fill=color,
                    fill_opacity=0.5,
                    stroke=color,
                    stroke_width=1,
                )
            )
    return g


def _bars(chart: CompiledChart) -> SvgElement:
    """Grouped bars; a missing value is drawn as an N/A label at the baseline."""
    assert chart.band is not None
    g = group(**{"class": "series", "font-family": FONT, "font-size": 10})
    n = len(chart.spec.series)
    slot = chart.band.bandwidth / n
    base = chart.y_scale(max(chart.y_ticks[0], 0.0))
    for i, (s, color) in enumerate(zip(chart.spec.series, chart.colors)):
        for category, y in zip(chart.spec.categories, s.y):
            x = chart.band(category) + i * slot
            if y is None:
                g.add(
                    text(
                        NA_LABEL,
                        x + slot / 2,
                        base - 4,
                        fill=chart.spec.text_color,
                        text_anchor="middle",
                    )
                )
                continue
            top = chart.y_scale(y)
            g.add(rect(x, min(top, base), slot * 0.9, abs(base - top), fill=color))
    return g


def _legend(chart: CompiledChart) -> SvgElement | None:
    """Legend to the right of the plot area, or None for a single series."""
    if len(chart.spec.series) < 2:
        return None
    x0 = chart.area.right + 16
    g = group(**{"class": "legend", "font-family": FONT, "font-size": 11})
    for i, (s, color) in enumerate(zip(chart.spec.series, chart.colors)):
        y = chart.area.top + 8 + 18 * i
        attrs: dict[str, object] = {"stroke": color, "stroke_width": 3}
        if s.dashed:
            attrs["stroke_dasharray"] = "6 4"
        g.add(line(x0, y, x0 + 18, y, **attrs))
        g.add(text(s.name, x0 + 24, y + 4, fill=chart.spec.text_color))
    return g


def render_svg(spec: ChartSpec) -> str:
    """Compile *spec* and return a standalone SVG document."""
    chart = compile_chart(spec)
    doc = SvgDocument(spec.width, spec.height, title=spec.title)
    doc.add(rect(0, 0, spec.width, spec.height, fill=spec.background))
    if spec.title:
        doc.add(
            text(
                spec.title,
                spec.width / 2,
                24,
                fill=spec.text_color,
                text_anchor="middle",
                font_family=FONT,
                font_size=14,
                font_weight="bold",
            )
        )
    doc.add(_grid_and_axes(chart))
    draw = {"line": _lines, "histogram": _histogram, "bars": _bars}[spec.kind]
    doc.add(draw(chart))
    legend = _legend(chart)
    if legend is not None:
        doc.add(legend)
    return doc.to_string()
