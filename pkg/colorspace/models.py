"""Pixel records. Plain in-memory values, not database tables."""

from typing import NamedTuple


class RgbPixel(NamedTuple):
    """Unit-interval RGB intensities"""
    r: float
    g: float
    b: float


class HsvPixel(NamedTuple):
    """Hexcone HSV: hue in degrees [0, 360), saturation and value in [0, 1]"""
    h: float
    s: float
    v: float
