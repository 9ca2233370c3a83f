"""Linear and band scales plus nice tick placement for chart axes."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class LinearScale:
    """Maps ``[lo, hi]`` in data units onto ``[start, end]`` in pixels."""

    lo: float
    hi: float
    start: float
    end: float

    def __call__(self, value: float) -> float:
        if self.hi == self.lo:
            return (self.start + self.end) / 2
        frac = (value - self.lo) / (self.hi - self.lo)
        return self.start + frac * (self.end - self.start)


@dataclass(frozen=True)
class BandScale:
    """Evenly spaced bands, one per category, with inner padding."""

    categories: tuple[str, ...]
    start: float
    end: float
    padding: float = 0.2

    @property
    def step(self) -> float:
        return (self.end - self.start) / max(len(self.categories), 1)

    @property
    def bandwidth(self) -> float:
        return self.step * (1.0 - self.padding)

    def __call__(self, category: str) -> float:
        """Left edge of the band of *category*."""
        i = self.categories.index(category)
        return self.start + i * self.step + self.step * self.padding / 2


def nice_step(raw: float) -> float:
    """Smallest of 1, 2, 5 (times a power of ten) that is >= *raw*."""
    if raw <= 0:
        raise ValueError(f"Tick step must be positive, got {raw}.")
    exponent = math.floor(math.log10(raw))
    fraction = raw / 10**exponent
    for nice in (1.0, 2.0, 5.0):
        if fraction <= nice:
            return nice * 10**exponent
    return 10.0 * 10**exponent


def nice_ticks(lo: float, hi: float, max_ticks: int = 6) -> list[float]:
    """Ticks at a nice spacing covering ``[lo, hi]``.

    Equal bounds are widened by one unit each way so that an axis of
    constant data still has ticks.
    """
    if lo > hi:
        lo, hi = hi, lo
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    step = nice_step((hi - lo) / max(max_ticks - 1, 1))
    digits = max(0, -math.floor(math.log10(step))) + 1
    first = math.floor(lo / step + 1e-9)
    last = math.ceil(hi / step - 1e-9)
    return [round(k * step, digits) for k in range(first, last + 1)]


def format_tick(value: float) -> str:
    """Whole numbers without a decimal point, others to six significant digits."""
    if math.isfinite(value) and value == int(value):
        return str(int(value))
    return f"{value:.6g}"
