"""Striped HSV-histogram descriptors."""

from dataclasses import dataclass

import numpy as np
from django.conf import settings

from forge.exceptions import InputError, ShapeError

DESCRIPTOR_DTYPE = np.float32


@dataclass(frozen=True)
class DescriptorConfig:
    m: int = 6
    bins_per_channel: int = 8

    def __post_init__(self):
        if self.m < 1:
            raise InputError(f'Descriptor needs at least one part, got m={self.m}')
        if self.bins_per_channel < 2:
            raise InputError(f'Descriptor needs at least two bins per channel, got {self.bins_per_channel}')

    @classmethod
    def from_settings(cls, **overrides):
        conf = settings.FORGE['DESCRIPTOR']
        values = {'m': conf['PARTS'], 'bins_per_channel': conf['BINS']}
        values.update(overrides)
        return cls(**values)

    @property
    def segment_dim(self):
        return 3 * self.bins_per_channel

    @property
    def heads(self):
        return self.m + 1

    @property
    def dimension(self):
        return self.heads * self.segment_dim

    def as_dict(self):
        return {'m': self.m, 'bins_per_channel': self.bins_per_channel}


@dataclass(frozen=True, eq=False)
class Descriptor:
    """
    Concatenation of m part vectors (top stripe first) followed by the
    global vector, each of length 3 * bins.
    """
    vector: np.ndarray
    config: DescriptorConfig

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=DESCRIPTOR_DTYPE).reshape(-1)
        if vector.shape[0] != self.config.dimension:
            raise ShapeError(f'Descriptor has {vector.shape[0]} values, config expects {self.config.dimension}')
        object.__setattr__(self, 'vector', vector)

    @property
    def dimension(self):
        return self.vector.shape[0]

    @property
    def segments(self):
        return self.vector.reshape(self.config.heads, self.config.segment_dim)

    @property
    def parts(self):
        return list(self.segments[:-1])

    @property
    def global_part(self):
        return self.segments[-1]
