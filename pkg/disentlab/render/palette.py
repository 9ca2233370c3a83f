"""Colour palette and WCAG contrast checks for chart output."""

from __future__ import annotations

from disentlab.errors import ContrastError

# Colourblind-friendly series colours, each at least 3:1 against white.
SERIES_COLORS: tuple[str, ...] = (
    "#4E79A7",  # blue
    "#C56A00",  # orange
    "#E15759",  # red
    "#4A8B86",  # teal
    "#7B7573",  # gray
)
TEXT_COLOR = "#222222"
GRID_COLOR = "#E6E6E6"
BACKGROUND = "#FFFFFF"

MIN_TEXT_CONTRAST = 4.5
MIN_GRAPHIC_CONTRAST = 3.0


def hex_to_rgb(color: str) -> tuple[int, int, int]:
    """Parse ``#RRGGBB`` or the short ``#RGB`` form into 0-255 channels."""
    digits = color.lstrip("#")
    if len(digits) == 3:
        digits = "".join(c * 2 for c in digits)
    if len(digits) != 6:
        raise ValueError(f"Invalid hex colour {color!r}; use '#RRGGBB' or '#RGB'.")
    return int(digits[0:2], 16), int(digits[2:4], 16), int(digits[4:6], 16)


def relative_luminance(color: str) -> float:
    """WCAG 2 relative luminance of an sRGB colour, 0 for black and 1 for white."""

    def channel(c: int) -> float:
        s = c / 255.0
        return s / 12.92 if s <= 0.04045 else ((s + 0.055) / 1.055) ** 2.4

    r, g, b = (channel(c) for c in hex_to_rgb(color))
    return 0.2126 * r + 0.7152 * g + 0.0722 * b


def contrast_ratio(a: str, b: str) -> float:
    """WCAG contrast ratio, from 1 (identical) to 21 (black on white).

    The order of the two colours does not matter.
    """
    hi, lo = sorted((relative_luminance(a), relative_luminance(b)), reverse=True)
    return (hi + 0.05) / (lo + 0.05)


def check_contrast(foreground: str, background: str, minimum: float, role: str) -> None:
    """Raise :class:`ContrastError` if *foreground* is too faint on *background*."""
    ratio = contrast_ratio(foreground, background)
    if ratio < minimum:
        raise ContrastError(
            f"{role} colour {foreground} on {background} has contrast "
            f"{ratio:.2f}:1, below the required {minimum}:1. "
            f"Pick a darker colour or a lighter background."
        )


def series_color(index: int) -> str:
    """Palette colour for the *index*-th series; the palette repeats."""
    return SERIES_COLORS[index % len(SERIES_COLORS)]
