"""
Random sampling from the transformation space and composed application.

Every image of a batch gets its own generator keyed by (seed, image index),
which is what keeps the threaded path bit-identical to the serial one.
"""

import logging

from forge.exceptions import InputError
from forge.parallel import ordered_map
from forge.seeding import substream

from .enhance import adjust_contrast, adjust_lightness, adjust_saturation, shift_hue
from .models import FACTORS, IDENTITY_VALUES, REC601, Image, TransformParams, TransformSpace

logger = logging.getLogger(__name__)


def sample_params(space: TransformSpace, rng) -> TransformParams:
    """
    Draw one parameter vector.

    All four uniforms are drawn on every call, enabled or not, so switching a
    factor on or off never moves the draws of the others.
    """
    draws = rng.random(len(FACTORS))
    values = {}
    for factor, u in zip(FACTORS, draws):
        if space.is_enabled(factor):
            low, high = space.range(factor)
            values[factor] = low + (high - low) * float(u)
        else:
            values[factor] = IDENTITY_VALUES[factor]
    return TransformParams(
        hue_shift=values['hue'],
        saturation=values['saturation'],
        lightness=values['lightness'],
        contrast=values['contrast'],
    )


def sample_batch_params(n, space: TransformSpace, seed):
    return [sample_params(space, substream(seed, index)) for index in range(n)]


def single_factor_space(space: TransformSpace, factor) -> TransformSpace:
    if factor not in FACTORS:
        raise InputError(f'Unknown factor {factor!r}; expected one of {FACTORS}')
    return space.only(factor)


def apply_transform(img: Image, t: TransformParams, order=FACTORS, luma_weights=REC601) -> Image:
    for factor in order:
        if factor == 'hue':
            img = shift_hue(img, t.hue_shift)
        elif factor == 'saturation':
            img = adjust_saturation(img, t.saturation, luma_weights)
        elif factor == 'lightness':
            img = adjust_lightness(img, t.lightness)
        elif factor == 'contrast':
            img = adjust_contrast(img, t.contrast, luma_weights)
    return img


def transform_batch(imgs, params, space: TransformSpace, threads=1):
    """Apply pre-sampled params to a batch, in input order."""
    def run(pair):
        img, t = pair
        return apply_transform(img, t, space.order, space.luma_weights)

    return ordered_map(run, zip(imgs, params), threads)


def augment_batch(imgs, space: TransformSpace, seed, threads=1):
    imgs = list(imgs)
    if not imgs:
        raise InputError('Cannot augment an empty batch.')
    params = sample_batch_params(len(imgs), space, seed)
    logger.debug(f'Augmenting {len(imgs)} images with seed {seed} on {threads} threads')
    return transform_batch(imgs, params, space, threads)
