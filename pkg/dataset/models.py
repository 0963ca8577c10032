"""Identity-labelled, camera-tagged image collections, held in memory."""

from collections import Counter
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from forge.exceptions import InputError
from transform.models import Image

SPLIT_CHOICES = [
    ('train', 'Training'),
    ('query', 'Query'),
    ('gallery', 'Gallery'),
]


@dataclass(frozen=True)
class PreprocessConfig:
    """Resize target plus the training-mode flip/crop knobs"""
    width: int = 128
    height: int = 384
    padding: int = 10
    flip_probability: float = 0.5

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InputError(f'Resize target must be positive, got {self.width}x{self.height}')
        if self.padding < 0:
            raise InputError(f'Crop padding must be non-negative, got {self.padding}')
        if not 0.0 <= self.flip_probability <= 1.0:
            raise InputError(f'Flip probability must lie in [0, 1], got {self.flip_probability}')

    @classmethod
    def from_settings(cls, **overrides):
        conf = settings.FORGE['DATASET']
        values = {
            'width': conf['WIDTH'],
            'height': conf['HEIGHT'],
            'padding': conf['PADDING'],
            'flip_probability': conf['FLIP_PROBABILITY'],
        }
        values.update(overrides)
        return cls(**values)

    def as_dict(self):
        return {
            'width': self.width,
            'height': self.height,
            'padding': self.padding,
            'flip_probability': self.flip_probability,
        }


@dataclass(frozen=True, eq=False)
class LabeledSample:
    image: Image
    identity: int
    camera: int
    source_path: str = ''

    def __post_init__(self):
        if self.identity < 0 or self.camera < 0:
            raise InputError(
                f'Identity and camera must be non-negative, got {self.identity}/{self.camera} for {self.source_path!r}'
            )


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """
    Immutable sample sequence plus its label registry.

    Original identity labels are kept on the samples; ``labels`` holds the
    contiguous internal index [0, n_identities) of each sample.
    """
    samples: tuple
    split: str = 'train'
    skipped: tuple = ()

    def __post_init__(self):
        if self.split not in dict(SPLIT_CHOICES):
            raise InputError(f'Unknown split {self.split!r}; expected one of {[s for s, _ in SPLIT_CHOICES]}')
        object.__setattr__(self, 'samples', tuple(self.samples))
        object.__setattr__(self, 'skipped', tuple(self.skipped))
        identities = tuple(sorted({s.identity for s in self.samples}))
        object.__setattr__(self, 'identities', identities)
        object.__setattr__(self, '_index', {identity: i for i, identity in enumerate(identities)})

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, index):
        return self.samples[index]

    @property
    def n_identities(self):
        return len(self.identities)

    @property
    def images(self):
        return [s.image for s in self.samples]

    @property
    def labels(self):
        return np.array([self._index[s.identity] for s in self.samples], dtype=np.int64)

    @property
    def original_labels(self):
        return np.array([s.identity for s in self.samples], dtype=np.int64)

    @property
    def cameras(self):
        return np.array([s.camera for s in self.samples], dtype=np.int64)

    def subset(self, indices):
        return LabeledDataset(tuple(self.samples[i] for i in indices), split=self.split)

    def restrict_identities(self, identities):
        keep = set(identities)
        missing = keep - set(self.identities)
        if missing:
            raise InputError(f'Identities not present in the {self.split} set: {sorted(missing)}')
        return LabeledDataset(tuple(s for s in self.samples if s.identity in keep), split=self.split)

    def summary(self):
        per_identity = Counter(s.identity for s in self.samples)
        per_camera = Counter(s.camera for s in self.samples)
        return {
            'split': self.split,
            'samples': len(self.samples),
            'identities': self.n_identities,
            'cameras': len(per_camera),
            'per_identity': {str(k): per_identity[k] for k in sorted(per_identity)},
            'per_camera': {str(k): per_camera[k] for k in sorted(per_camera)},
            'skipped': list(self.skipped),
        }
