"""Minimal SVG element tree with string serialization."""

from __future__ import annotations

from xml.sax.saxutils import escape, quoteattr

# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------


def _attr_name(name: str) -> str:
    """``stroke_width`` -> ``stroke-width``; ``viewBox`` stays as is."""
    return name.replace("_", "-")


def _attr_value(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class SvgElement:
    """One XML element: tag, attributes, text and children."""

    def __init__(self, tag: str, text: str | None = None, **attrs: object) -> None:
        self.tag = tag
        self.text = text
        self.attrs = {_attr_name(k): _attr_value(v) for k, v in attrs.items()}
        self.children: list[SvgElement] = []

    def add(self, child: SvgElement) -> SvgElement:
        self.children.append(child)
        return child

    def to_string(self, depth: int = 0) -> str:
        """Serialize with two-space indentation per nesting level."""
        pad = "  " * depth
        attrs = "".join(f" {k}={quoteattr(v)}" for k, v in self.attrs.items())
        if not self.children and self.text is None:
            return f"{pad}<{self.tag}{attrs}/>"
        if not self.children:
            return f"{pad}<{self.tag}{attrs}>{escape(self.text or '')}</{self.tag}>"
        lines = [f"{pad}<{self.tag}{attrs}>"]
        if self.text is not None:
            lines.append(f"{pad}  {escape(self.text)}")
        lines.extend(child.to_string(depth + 1) for child in self.children)
        lines.append(f"{pad}</{self.tag}>")
        return "\n".join(lines)


class SvgDocument(SvgElement):
    """Root ``<svg>`` with an accessible ``<title>`` as first child."""

    XMLNS = "http://www.w3.org/2000/svg"

    def __init__(self, width: float, height: float, title: str = "") -> None:
        super().__init__(
            "svg",
            xmlns=self.XMLNS,
            width=width,
            height=height,
            viewBox=f"0 0 {_attr_value(width)} {_attr_value(height)}",
            role="img",
        )
        if title:
            self.add(SvgElement("title", text=title))

    def to_string(self, depth: int = 0) -> str:
        header = '<?xml version="1.0" encoding="UTF-8"?>\n'
        return header + super().to_string(depth) + "\n"


# ---------------------------------------------------------------------------
# Shape factories
# ---------------------------------------------------------------------------


def rect(
    x: float, y: float, width: float, height: float, **attrs: object
) -> SvgElement:
    return SvgElement("rect", x=x, y=y, width=width, height=height, **attrs)


def line(x1: float, y1: float, x2: float, y2: float, **attrs: object) -> SvgElement:
    return SvgElement("line", x1=x1, y1=y1, x2=x2, y2=y2, **attrs)


def text(content: str, x: float, y: float, **attrs: object) -> SvgElement:
    return SvgElement("text", text=content, x=x, y=y, **attrs)


def group(**attrs: object) -> SvgElement:
    return SvgElement("g", **attrs)


def polyline(points: list[tuple[float, float]], **attrs: object) -> SvgElement:
    """Open path through *points* in order."""
    coords = " ".join(f"{x:.6g},{y:.6g}" for x, y in points)
    return SvgElement("polyline", points=coords, **attrs)
