"""
Per-factor transformation primitives.

Hue is rotated in HSV space. Saturation, lightness and contrast blend the
image with a degenerate version of itself (Haeberli & Voorhies):

    out = clamp((1 - alpha) * degenerate + alpha * original, 0, 1)

with the grayscale image, black, and the flat mean-luminance image as the
respective degenerates. alpha > 1 extrapolates past the original. Every
primitive clamps its own output and returns a new float32 raster; inputs
are never written to.
"""

import numpy as np

from colorspace.conversions import rotate_hue_array
from forge.exceptions import ShapeError

from .models import PIXEL_DTYPE, REC601, Image


def luminance(img: Image, weights=REC601):
    """Per-pixel luminance, shape (height, width)."""
    w = np.asarray(weights, dtype=PIXEL_DTYPE)
    px = img.pixels
    out = px[..., 0] * w[0]
    out += px[..., 1] * w[1]
    out += px[..., 2] * w[2]
    return out


def grayscale(img: Image, weights=REC601) -> Image:
    return Image(np.repeat(luminance(img, weights)[..., None], 3, axis=2))


def _blend(degenerate, original, alpha):
    out = np.multiply(original, alpha, dtype=PIXEL_DTYPE)
    out += np.multiply(degenerate, 1.0 - alpha, dtype=PIXEL_DTYPE)
    np.clip(out, 0.0, 1.0, out=out)
    return out


def interpolate(degenerate: Image, original: Image, alpha) -> Image:
    if degenerate.pixels.shape != original.pixels.shape:
        raise ShapeError(
            f'Cannot interpolate a {degenerate.width}x{degenerate.height} image '
            f'with a {original.width}x{original.height} image.'
        )
    return Image(_blend(degenerate.pixels, original.pixels, float(alpha)))


def shift_hue(img: Image, degrees) -> Image:
    degrees = float(degrees)
    if degrees == 0.0:
        return img
    out = rotate_hue_array(img.pixels, degrees)
    np.clip(out, 0.0, 1.0, out=out)
    return Image(out)


def adjust_saturation(img: Image, factor, weights=REC601) -> Image:
    factor = float(factor)
    if factor == 1.0:
        return img
    gray = luminance(img, weights)[..., None]
    return Image(_blend(gray, img.pixels, factor))


def adjust_lightness(img: Image, factor) -> Image:
    factor = float(factor)
    if factor == 1.0:
        return img
    # degenerate is black, so the blend reduces to a scale
    out = np.multiply(img.pixels, factor, dtype=PIXEL_DTYPE)
    np.clip(out, 0.0, 1.0, out=out)
    return Image(out)


def adjust_contrast(img: Image, factor, weights=REC601) -> Image:
    factor = float(factor)
    if factor == 1.0:
        return img
    mean = float(luminance(img, weights).mean(dtype=np.float64))
    return Image(_blend(mean, img.pixels, factor))
