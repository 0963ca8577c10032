"""
Hexcone RGB <-> HSV conversions.

The array kernels work on any ``(..., 3)`` float array and are what the
transforms and the descriptor use; the pixel functions are thin wrappers
around them.

    V = max(R, G, B)
    S = (V - min) / V            (0 when V = 0)
    H = 60 * ((G - B) / d mod 6)  if R is the max
        60 * ((B - R) / d + 2)    if G is the max
        60 * ((R - G) / d + 4)    if B is the max

Achromatic pixels (d = 0) get H = 0, so every gray has a single
representation. The way back evaluates one trapezoid per channel,

    C = V - V * S * clamp(min(k, 4 - k), 0, 1),   k = (n + H / 60) mod 6

with n = 5, 3, 1 for R, G, B.
"""

import numpy as np

from .models import HsvPixel, RgbPixel

CHANNEL_OFFSETS = (5.0, 3.0, 1.0)


def hexcone_position(r, g, b, v, delta):
    """H / 60 before wrapping, in [-1, 5]; 0 for achromatic pixels. Max channel priority r, g, b."""
    position = r - g
    position += 4.0 * delta
    np.copyto(position, b - r + 2.0 * delta, where=g == v)
    np.copyto(position, g - b, where=r == v)
    # every numerator is 0 where delta is
    np.divide(position, delta, out=position, where=delta > 0)
    return position


def _trapezoids(position, v, delta):
    """Channel values of shape (n, 3) for positions of shape (n,)."""
    k = position[:, None] + np.asarray(CHANNEL_OFFSETS, dtype=position.dtype)
    wraps = k * (1.0 / 6.0)
    np.floor(wraps, out=wraps)
    wraps *= 6.0
    k -= wraps
    ramp = np.minimum(k, 4.0 - k)
    np.clip(ramp, 0.0, 1.0, out=ramp)
    ramp *= delta[:, None]
    np.subtract(v[:, None], ramp, out=ramp)
    return ramp


def rgb_to_hsv_array(rgb):
    rgb = np.asarray(rgb, dtype=np.float64)
    flat = rgb.reshape(-1, 3)
    r, g, b = flat[:, 0], flat[:, 1], flat[:, 2]
    v = np.maximum(np.maximum(r, g), b)
    delta = v - np.minimum(np.minimum(r, g), b)

    s = np.divide(delta, v, out=np.zeros_like(v), where=v > 0)
    h = np.mod(hexcone_position(r, g, b, v, delta) * 60.0, 360.0)
    h[h >= 360.0] -= 360.0
    return np.stack([h, s, v], axis=-1).reshape(rgb.shape)


def hsv_to_rgb_array(hsv):
    hsv = np.asarray(hsv, dtype=np.float64)
    flat = hsv.reshape(-1, 3)
    v = flat[:, 2]
    return _trapezoids(np.mod(flat[:, 0], 360.0) / 60.0, v, v * flat[:, 1]).reshape(hsv.shape)


def rotate_hue_array(rgb, degrees):
    """
    Rotate hue by ``degrees`` keeping S and V, in the float dtype of ``rgb``.

    Same result as converting to HSV, adding to H modulo 360 and converting
    back, without building the HSV image: rotation keeps the max and min of
    every pixel, so only the hexcone position moves.
    """
    rgb = np.asarray(rgb)
    if rgb.dtype not in (np.float32, np.float64):
        rgb = rgb.astype(np.float64)
    r, g, b = np.ascontiguousarray(rgb.reshape(-1, 3).T)
    v = np.maximum(np.maximum(r, g), b)
    delta = v - np.minimum(np.minimum(r, g), b)
    position = hexcone_position(r, g, b, v, delta)
    position += (float(degrees) % 360.0) / 60.0
    return _trapezoids(position, v, delta).reshape(rgb.shape)


def rgb_to_hsv(p: RgbPixel) -> HsvPixel:
    h, s, v = rgb_to_hsv_array([p.r, p.g, p.b])
    return HsvPixel(float(h), float(s), float(v))


def hsv_to_rgb(p: HsvPixel) -> RgbPixel:
    r, g, b = hsv_to_rgb_array([p.h, p.s, p.v])
    return RgbPixel(float(r), float(g), float(b))
