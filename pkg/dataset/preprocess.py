"""
Geometric preprocessing: bilinear resize, plus random flip and
pad-then-crop in training mode.
"""

import numpy as np
from django.conf import settings
from PIL import Image as PILImage

from forge.exceptions import InputError, ShapeError
from transform.models import PIXEL_DTYPE, Image


def resize_bilinear(img: Image, width, height) -> Image:
    if width <= 0 or height <= 0:
        raise ShapeError(f'Target size must be positive, got {width}x{height}')
    if (img.width, img.height) == (width, height):
        return img
    channels = [
        np.asarray(
            PILImage.fromarray(np.ascontiguousarray(img.pixels[..., c], dtype=np.float32)).resize(
                (width, height), PILImage.Resampling.BILINEAR
            ),
            dtype=PIXEL_DTYPE,
        )
        for c in range(3)
    ]
    return Image(np.clip(np.stack(channels, axis=-1), 0.0, 1.0))


def random_flip_crop(img: Image, rng, flip_probability, padding) -> Image:
    # both draws happen every time so the stream position never depends on the branch taken
    flip = rng.random() < flip_probability
    offset_y, offset_x = rng.integers(0, 2 * padding + 1, size=2)
    pixels = img.pixels[:, ::-1] if flip else img.pixels
    if padding:
        padded = np.pad(pixels, ((padding, padding), (padding, padding), (0, 0)))
        pixels = padded[offset_y:offset_y + img.height, offset_x:offset_x + img.width]
    return Image(np.ascontiguousarray(pixels))


def preprocess(sample, target_w, target_h, train_mode=False, rng=None, flip_probability=None, padding=None) -> Image:
    conf = settings.FORGE['DATASET']
    img = getattr(sample, 'image', sample)
    if target_w <= 0 or target_h <= 0:
        raise ShapeError(f'Target size must be positive, got {target_w}x{target_h}')
    if train_mode:
        if rng is None:
            raise InputError('Training-mode preprocessing needs a seeded random generator.')
        img = random_flip_crop(
            img,
            rng,
            conf['FLIP_PROBABILITY'] if flip_probability is None else flip_probability,
            conf['PADDING'] if padding is None else padding,
        )
    return resize_bilinear(img, target_w, target_h)
