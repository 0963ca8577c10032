"""
Descriptor extraction and matching.

Rows are split into m horizontal stripes of ``height // m`` rows, the last
stripe taking the remainder. Each stripe and the whole image get a hard-binned
histogram per HSV channel (hue bins partition [0, 360) uniformly), the three
channel histograms are concatenated and the result is L2-normalised. An
all-zero histogram stays zero.
"""

import numpy as np

from colorspace.conversions import rgb_to_hsv_array
from forge.exceptions import ShapeError
from forge.parallel import ordered_map

from .models import DESCRIPTOR_DTYPE, Descriptor, DescriptorConfig


def _bin_indices(hsv, bins):
    scaled = hsv / np.array([360.0, 1.0, 1.0]) * bins
    return np.clip(np.floor(scaled), 0, bins - 1).astype(np.int64)


def _histogram(indices, bins):
    flat = indices.reshape(-1, 3)
    hist = np.concatenate([np.bincount(flat[:, c], minlength=bins) for c in range(3)]).astype(np.float64)
    norm = np.linalg.norm(hist)
    return hist / norm if norm > 0 else hist


def stripe_bounds(height, m):
    base = height // m
    return [(k * base, (k + 1) * base if k < m - 1 else height) for k in range(m)]


def extract(img, cfg: DescriptorConfig) -> Descriptor:
    if img.height < cfg.m:
        raise ShapeError(f'Image height {img.height} is smaller than the part count m={cfg.m}')
    indices = _bin_indices(rgb_to_hsv_array(img.pixels), cfg.bins_per_channel)
    segments = [_histogram(indices[top:bottom], cfg.bins_per_channel) for top, bottom in stripe_bounds(img.height, cfg.m)]
    segments.append(_histogram(indices, cfg.bins_per_channel))
    return Descriptor(np.concatenate(segments).astype(DESCRIPTOR_DTYPE), cfg)


def extract_many(images, cfg: DescriptorConfig, threads=1):
    """Descriptor matrix of shape (n, dimension), rows in input order."""
    rows = ordered_map(lambda img: extract(img, cfg).vector, images, threads)
    if not rows:
        return np.zeros((0, cfg.dimension), dtype=DESCRIPTOR_DTYPE)
    return np.stack(rows)


def distance(a: Descriptor, b: Descriptor) -> float:
    if a.dimension != b.dimension:
        raise ShapeError(f'Cannot compare descriptors of dimension {a.dimension} and {b.dimension}')
    return float(np.linalg.norm(a.vector.astype(np.float64) - b.vector.astype(np.float64)))
