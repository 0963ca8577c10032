"""Images and the transformation space. In-memory records, no tables."""

from dataclasses import dataclass, field, replace

import numpy as np
from django.conf import settings

from forge.exceptions import InputError, ShapeError

FACTORS = ('hue', 'saturation', 'lightness', 'contrast')

FACTOR_CODES = {'H': 'hue', 'S': 'saturation', 'L': 'lightness', 'C': 'contrast'}

REC601 = (0.299, 0.587, 0.114)

PIXEL_DTYPE = np.float32


@dataclass(frozen=True, eq=False)
class Image:
    """float32 RGB raster of shape (height, width, 3), C-contiguous, channels in [0, 1] at API boundaries"""
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.ascontiguousarray(self.pixels, dtype=PIXEL_DTYPE)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ShapeError(f'Image pixels must have shape (height, width, 3), got {pixels.shape}')
        if pixels.shape[0] == 0 or pixels.shape[1] == 0:
            raise ShapeError(f'Image must have positive width and height, got {pixels.shape[1]}x{pixels.shape[0]}')
        object.__setattr__(self, 'pixels', pixels)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @classmethod
    def solid(cls, width, height, rgb):
        return cls(np.broadcast_to(np.asarray(rgb, dtype=PIXEL_DTYPE), (height, width, 3)).copy())

    @classmethod
    def from_uint8(cls, array):
        return cls(np.asarray(array, dtype=PIXEL_DTYPE) / PIXEL_DTYPE(255.0))

    def to_uint8(self):
        # round half away from zero; values are non-negative after the clip
        return np.floor(np.clip(self.pixels, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)

    def equals(self, other):
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class TransformParams:
    """The parameter vector t: hue shift in degrees, multiplicative factors for the rest"""
    hue_shift: float = 0.0
    saturation: float = 1.0
    lightness: float = 1.0
    contrast: float = 1.0

    @classmethod
    def identity(cls):
        return cls()

    def value(self, factor):
        return self.hue_shift if factor == 'hue' else getattr(self, factor)

    @property
    def non_identity_factors(self):
        identity = TransformParams()
        return tuple(f for f in FACTORS if self.value(f) != identity.value(f))

    @property
    def is_identity(self):
        return not self.non_identity_factors

    def as_dict(self):
        return {
            'hue_shift': self.hue_shift,
            'saturation': self.saturation,
            'lightness': self.lightness,
            'contrast': self.contrast,
        }


IDENTITY_VALUES = {f: TransformParams().value(f) for f in FACTORS}


@dataclass(frozen=True)
class TransformSpace:
    """Per-factor enable flags and closed [min, max] ranges; disabled factors sample their identity"""
    hue: tuple = (-18.0, 18.0)
    saturation: tuple = (0.6, 1.4)
    lightness: tuple = (0.6, 1.4)
    contrast: tuple = (0.6, 1.4)
    enabled: frozenset = field(default_factory=lambda: frozenset(FACTORS))
    order: tuple = FACTORS
    luma_weights: tuple = REC601

    def __post_init__(self):
        for factor in FACTORS:
            low, high = getattr(self, factor)
            if not (np.isfinite(low) and np.isfinite(high)) or low > high:
                raise InputError(f'Invalid {factor} range [{low}, {high}]: need finite min <= max.')
            object.__setattr__(self, factor, (float(low), float(high)))
        unknown = set(self.enabled) - set(FACTORS)
        if unknown:
            raise InputError(f'Unknown transformation factors: {sorted(unknown)}')
        object.__setattr__(self, 'enabled', frozenset(self.enabled))
        if sorted(self.order) != sorted(FACTORS):
            raise InputError(f'Composition order must be a permutation of {FACTORS}, got {self.order}')
        object.__setattr__(self, 'order', tuple(self.order))
        if len(self.luma_weights) != 3:
            raise InputError('Luminance weights need exactly three values.')
        object.__setattr__(self, 'luma_weights', tuple(float(w) for w in self.luma_weights))

    @classmethod
    def from_settings(cls, **overrides):
        conf = settings.FORGE['TRANSFORM']
        values = {
            'hue': tuple(conf['HUE']),
            'saturation': tuple(conf['SATURATION']),
            'lightness': tuple(conf['LIGHTNESS']),
            'contrast': tuple(conf['CONTRAST']),
            'enabled': frozenset(conf['ENABLED']),
            'order': tuple(conf['ORDER']),
            'luma_weights': tuple(conf['LUMA_WEIGHTS']),
        }
        values.update(overrides)
        return cls(**values)

    def range(self, factor):
        return getattr(self, factor)

    def is_enabled(self, factor):
        return factor in self.enabled

    def only(self, *factors):
        return replace(self, enabled=frozenset(factors))

    def disabled(self):
        return replace(self, enabled=frozenset())

    def as_dict(self):
        return {
            'hue': list(self.hue),
            'saturation': list(self.saturation),
            'lightness': list(self.lightness),
            'contrast': list(self.contrast),
            'enabled': [f for f in FACTORS if f in self.enabled],
            'order': list(self.order),
            'luma_weights': list(self.luma_weights),
        }
